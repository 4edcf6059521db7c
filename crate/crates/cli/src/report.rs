//! Model predictions next to the built-in contact-angle measurements.

use std::fmt;

use serde::Serialize;

use lotus_core::gradient::FractionMeasure;
use lotus_core::lattice::{check_design_rules, DesignRules, DrcTarget, HoneycombSpec, Nm};
use lotus_core::wetting::{cassie_apparent_angle, Fraction, Material};

/// One measured static contact angle with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measurement {
    pub value_deg: f64,
    pub uncertainty_deg: f64,
    pub provenance: &'static str,
}

/// A measured surface: `wall` is `None` for the unstructured reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetEntry {
    pub label: &'static str,
    pub pitch_nm: Option<Nm>,
    pub wall_nm: Option<Nm>,
    pub measurement: Measurement,
}

/// Droplet volume used for the measurements, µl.
pub const DATASET_DROPLET_VOLUME_UL: (f64, f64) = (1.1, 0.1);

pub const MEASURED: [DatasetEntry; 3] = [
    DatasetEntry {
        label: "reference",
        pitch_nm: None,
        wall_nm: None,
        measurement: Measurement {
            value_deg: 81.0,
            uncertainty_deg: 4.0,
            provenance: "static angle, distilled water on unstructured hot-embossed PMMA",
        },
    },
    DatasetEntry {
        label: "area 1",
        pitch_nm: Some(4000),
        wall_nm: Some(1000),
        measurement: Measurement {
            value_deg: 87.0,
            uncertainty_deg: 2.0,
            provenance:
                "static angle, distilled water on PMMA honeycomb, 1000 nm walls, 4 µm pitch",
        },
    },
    DatasetEntry {
        label: "area 2",
        pitch_nm: Some(4000),
        wall_nm: Some(400),
        measurement: Measurement {
            value_deg: 107.0,
            uncertainty_deg: 6.0,
            provenance: "static angle, distilled water on PMMA honeycomb, 400 nm walls, 4 µm pitch",
        },
    },
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub pitch_nm: Option<Nm>,
    pub wall_nm: Option<Nm>,
    pub f_linear: f64,
    pub f_area: f64,
    pub predicted_linear_deg: f64,
    pub predicted_area_deg: f64,
    pub measured: Option<Measurement>,
    /// Prediction minus measurement, degrees.
    pub deviation_linear_deg: Option<f64>,
    pub deviation_area_deg: Option<f64>,
    /// DRC findings; empty when the zone passes.
    pub drc: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub material: String,
    pub theta_flat_deg: f64,
    pub droplet_volume_ul: (f64, f64),
    pub rows: Vec<ReportRow>,
}

impl ValidationReport {
    /// Reference row plus one row per honeycomb zone.
    pub fn new(
        zones: &[(String, HoneycombSpec)],
        material: &Material,
        rules: &DesignRules,
    ) -> Self {
        let theta = material.theta_flat();
        let mut rows = vec![row(
            "reference (unstructured)".into(),
            None,
            Fraction::ONE,
            Fraction::ONE,
            theta,
            lookup(None, None),
            Vec::new(),
        )];
        for (label, spec) in zones {
            let (p, w) = (spec.pitch(), spec.wall());
            let drc = check_design_rules(DrcTarget::Spec(spec), rules)
                .iter()
                .map(|v| v.to_string())
                .collect();
            rows.push(row(
                label.clone(),
                Some((p, w)),
                FractionMeasure::LinearRatio.fraction_of_wall(w, p),
                FractionMeasure::AreaFraction.fraction_of_wall(w, p),
                theta,
                lookup(Some(p), Some(w)),
                drc,
            ));
        }
        ValidationReport {
            material: material.name().to_string(),
            theta_flat_deg: theta,
            droplet_volume_ul: DATASET_DROPLET_VOLUME_UL,
            rows,
        }
    }

    pub fn paper_designs(material: &Material, rules: &DesignRules) -> Self {
        let zones = [
            (
                "zone 1 (1000 nm walls)".to_string(),
                HoneycombSpec::paper_design_1(),
            ),
            (
                "zone 2 (400 nm walls)".to_string(),
                HoneycombSpec::paper_design_2(),
            ),
        ];
        ValidationReport::new(&zones, material, rules)
    }
}

fn lookup(pitch: Option<Nm>, wall: Option<Nm>) -> Option<Measurement> {
    MEASURED
        .iter()
        .find(|e| e.pitch_nm == pitch && e.wall_nm == wall)
        .map(|e| e.measurement)
}

fn row(
    label: String,
    geometry: Option<(Nm, Nm)>,
    f_linear: Fraction,
    f_area: Fraction,
    theta: f64,
    measured: Option<Measurement>,
    drc: Vec<String>,
) -> ReportRow {
    // Fractions here lie in (0, 1], where the angle always exists.
    let angle = |f: Fraction| cassie_apparent_angle(f, theta).unwrap_or(f64::NAN);
    let (pl, pa) = (angle(f_linear), angle(f_area));
    ReportRow {
        label,
        pitch_nm: geometry.map(|g| g.0),
        wall_nm: geometry.map(|g| g.1),
        f_linear: f_linear.value(),
        f_area: f_area.value(),
        predicted_linear_deg: pl,
        predicted_area_deg: pa,
        deviation_linear_deg: measured.map(|m| pl - m.value_deg),
        deviation_area_deg: measured.map(|m| pa - m.value_deg),
        measured,
        drc,
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# model vs measurement, {} (theta_flat = {} deg), droplet {} ± {} µl",
            self.material, self.theta_flat_deg, self.droplet_volume_ul.0, self.droplet_volume_ul.1
        )?;
        writeln!(
            f,
            "{:<26} {:>8} {:>8} {:>8} {:>16} {:>14} {:>13} {:>15} {:>13}  drc",
            "region",
            "wall_nm",
            "f_linear",
            "f_area",
            "pred_linear_deg",
            "pred_area_deg",
            "measured_deg",
            "dev_linear_deg",
            "dev_area_deg"
        )?;
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |d| format!("{d:+.3}"));
        for r in &self.rows {
            let measured = r.measured.map_or("-".to_string(), |m| {
                format!("{}±{}", m.value_deg, m.uncertainty_deg)
            });
            let drc = if r.wall_nm.is_none() {
                "-".to_string()
            } else if r.drc.is_empty() {
                "pass".to_string()
            } else {
                format!("FAIL: {}", r.drc.join("; "))
            };
            writeln!(
                f,
                "{:<26} {:>8} {:>8.4} {:>8.4} {:>16.3} {:>14.3} {:>13} {:>15} {:>13}  {drc}",
                r.label,
                r.wall_nm.map_or("-".to_string(), |w| w.to_string()),
                r.f_linear,
                r.f_area,
                r.predicted_linear_deg,
                r.predicted_area_deg,
                measured,
                opt(r.deviation_linear_deg),
                opt(r.deviation_area_deg),
            )?;
        }
        writeln!(f, "# deviations are prediction minus measurement; the measured angles are physical observations")?;
        writeln!(f, "# and are listed for comparison only")?;
        for e in &MEASURED {
            writeln!(f, "# {}: {}", e.label, e.measurement.provenance)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_designs_report() {
        let r =
            ValidationReport::paper_designs(&Material::water_on_pmma(), &DesignRules::default());
        assert_eq!(r.rows.len(), 3);
        assert!((r.rows[1].predicted_area_deg - 119.6077795875116).abs() < 1e-9);
        assert!((r.rows[2].predicted_area_deg - 141.2859856357785).abs() < 1e-9);
        assert_eq!(r.rows[2].measured.unwrap().value_deg, 107.0);
        let dev = r.rows[2].deviation_area_deg.unwrap();
        assert!((dev - (141.2859856357785 - 107.0)).abs() < 1e-9);
        assert!(r.rows.iter().skip(1).all(|row| row.drc.is_empty()));
        let text = r.to_string();
        for needle in ["81±4", "87±2", "107±6", "119.608", "141.286", "+34.286"] {
            assert!(text.contains(needle), "missing {needle}:\n{text}");
        }
    }

    #[test]
    fn every_measurement_has_uncertainty_and_source() {
        assert!(MEASURED
            .iter()
            .all(|e| e.measurement.uncertainty_deg > 0.0 && !e.measurement.provenance.is_empty()));
    }

    #[test]
    fn unmatched_zone_has_no_measurement() {
        let zones = [(
            "z".to_string(),
            HoneycombSpec::new(4000, 700, 4000).unwrap(),
        )];
        let r = ValidationReport::new(&zones, &Material::water_on_pmma(), &DesignRules::default());
        assert!(r.rows[1].measured.is_none());
        assert!(r.rows[1].deviation_area_deg.is_none());
    }
}
