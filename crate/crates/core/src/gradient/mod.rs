//! Surface-fraction gradients along a straight channel.
//!
//! A design is a column-wise wall-thickness profile on the honeycomb lattice: column
//! `k` spans `[k·pitch, (k+1)·pitch)` along the channel and all cells whose centres
//! fall in it share one wall thickness. Walls are snapped to the fabrication grid,
//! so the realized fraction of a column may differ slightly from its target.

mod transport;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    check_design_rules, hexagon_opening, snap_to_grid, CellGrid, DesignRules, DrcTarget,
    LatticeFrame, Nm, Openings, Rect, DEFAULT_FABRICATION_GRID,
};
use crate::wetting::Fraction;

pub use transport::{
    contact_line_force, footprint, local_apparent_angle, net_driving_force, retention_force,
    simulate_droplet, Footprint, SimulationTrace, TerminalReason, TraceStep, DEFAULT_MAX_STEPS,
};

/// Which honeycomb fraction a target value refers to, and which one enters the
/// wetting model for the realized design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractionMeasure {
    /// `wall / pitch`
    LinearRatio,
    /// `1 − (1 − wall/pitch)²`
    AreaFraction,
}

impl FractionMeasure {
    /// Fraction realized by a wall of thickness `wall` at `pitch`.
    pub fn fraction_of_wall(self, wall: Nm, pitch: Nm) -> Fraction {
        let q = wall as f64 / pitch as f64;
        let f = match self {
            FractionMeasure::LinearRatio => q,
            FractionMeasure::AreaFraction => {
                let (w, p) = (wall as i128, pitch as i128);
                (w * (2 * p - w)) as f64 / (p * p) as f64
            }
        };
        Fraction::new(f.clamp(0.0, 1.0)).expect("clamped")
    }

    /// Unsnapped wall thickness for fraction `f`.
    pub fn ideal_wall(self, f: f64, pitch: Nm) -> f64 {
        let p = pitch as f64;
        match self {
            FractionMeasure::LinearRatio => f * p,
            FractionMeasure::AreaFraction => p * (1.0 - (1.0 - f).sqrt()),
        }
    }
}

/// Wall thickness realizing `f` at `pitch`, on the default 10 nm grid.
pub fn wall_for_fraction(f: Fraction, pitch: Nm, measure: FractionMeasure) -> Result<Nm> {
    wall_for_fraction_on_grid(f, pitch, measure, DEFAULT_FABRICATION_GRID)
}

/// Wall thickness realizing `f` at `pitch`, rounded half-up to `grid`.
///
/// Fractions that snap to a zero wall (or to a full pitch) are errors, not clamps.
pub fn wall_for_fraction_on_grid(
    f: Fraction,
    pitch: Nm,
    measure: FractionMeasure,
    grid: Nm,
) -> Result<Nm> {
    const OP: &str = "wall_for_fraction";
    if pitch <= 0 || grid <= 0 {
        return Err(Error::domain(
            OP,
            format!("pitch {pitch} and grid {grid} must be > 0 nm"),
        ));
    }
    let fv = f.value();
    if fv <= 0.0 || fv >= 1.0 {
        return Err(Error::domain(OP, format!("fraction {fv} is not in (0, 1)")));
    }
    let wall = snap_to_grid(measure.ideal_wall(fv, pitch), grid);
    if wall <= 0 || wall >= pitch {
        return Err(Error::domain(
            OP,
            format!(
                "fraction {fv} snaps to wall {wall} nm outside (0, {pitch}) on a {grid} nm grid"
            ),
        ));
    }
    Ok(wall)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GradientSpecFields")]
pub struct GradientSpec {
    length: Nm,
    lateral_width: Nm,
    pitch: Nm,
    f_start: Fraction,
    f_end: Fraction,
    measure: FractionMeasure,
    height: Nm,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GradientSpecFields {
    length: Nm,
    lateral_width: Nm,
    pitch: Nm,
    f_start: Fraction,
    f_end: Fraction,
    measure: FractionMeasure,
    height: Nm,
}

impl TryFrom<GradientSpecFields> for GradientSpec {
    type Error = Error;
    fn try_from(g: GradientSpecFields) -> Result<Self> {
        GradientSpec::new(
            g.length,
            g.lateral_width,
            g.pitch,
            g.f_start,
            g.f_end,
            g.measure,
            g.height,
        )
    }
}

impl GradientSpec {
    pub fn new(
        length: Nm,
        lateral_width: Nm,
        pitch: Nm,
        f_start: Fraction,
        f_end: Fraction,
        measure: FractionMeasure,
        height: Nm,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if pitch <= 0 {
            problems.push(format!("pitch {pitch} must be > 0 nm"));
        } else if length < pitch {
            problems.push(format!(
                "length {length} is shorter than one pitch ({pitch} nm)"
            ));
        }
        if lateral_width <= 0 {
            problems.push(format!("lateral_width {lateral_width} must be > 0 nm"));
        }
        if height <= 0 {
            problems.push(format!("height {height} must be > 0 nm"));
        }
        for (name, f) in [("f_start", f_start), ("f_end", f_end)] {
            if f.value() <= 0.0 || f.value() >= 1.0 {
                problems.push(format!("{name} {} is not in (0, 1)", f.value()));
            }
        }
        if !problems.is_empty() {
            return Err(Error::invalid("gradient spec", problems.join("; ")));
        }
        Ok(GradientSpec {
            length,
            lateral_width,
            pitch,
            f_start,
            f_end,
            measure,
            height,
        })
    }

    pub fn length(&self) -> Nm {
        self.length
    }

    pub fn lateral_width(&self) -> Nm {
        self.lateral_width
    }

    pub fn pitch(&self) -> Nm {
        self.pitch
    }

    pub fn f_start(&self) -> Fraction {
        self.f_start
    }

    pub fn f_end(&self) -> Fraction {
        self.f_end
    }

    pub fn measure(&self) -> FractionMeasure {
        self.measure
    }

    pub fn height(&self) -> Nm {
        self.height
    }

    /// `floor(length / pitch)`
    pub fn column_count(&self) -> usize {
        (self.length / self.pitch) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradientColumn {
    pub x: Nm,
    pub wall: Nm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GradientDesignFields")]
pub struct GradientDesign {
    spec: GradientSpec,
    fabrication_grid: Nm,
    columns: Vec<GradientColumn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GradientDesignFields {
    spec: GradientSpec,
    fabrication_grid: Nm,
    columns: Vec<GradientColumn>,
}

impl TryFrom<GradientDesignFields> for GradientDesign {
    type Error = Error;
    fn try_from(g: GradientDesignFields) -> Result<Self> {
        GradientDesign::from_columns(g.spec, g.fabrication_grid, g.columns)
    }
}

impl GradientDesign {
    /// Assemble a design from explicit columns, checking its invariants.
    pub fn from_columns(
        spec: GradientSpec,
        fabrication_grid: Nm,
        columns: Vec<GradientColumn>,
    ) -> Result<Self> {
        let p = spec.pitch;
        if fabrication_grid <= 0 {
            return Err(Error::invalid(
                "gradient design",
                "fabrication_grid must be > 0",
            ));
        }
        if columns.len() != spec.column_count() {
            return Err(Error::invalid(
                "gradient design",
                format!(
                    "{} columns, expected {}",
                    columns.len(),
                    spec.column_count()
                ),
            ));
        }
        for (k, c) in columns.iter().enumerate() {
            if c.x != k as Nm * p {
                return Err(Error::invalid(
                    "gradient design",
                    format!("column {k} at x={} nm, expected {}", c.x, k as Nm * p),
                ));
            }
            if c.wall <= 0 || c.wall >= p || c.wall % fabrication_grid != 0 {
                return Err(Error::invalid(
                    "gradient design",
                    format!(
                        "column {k} wall {} nm not in (0, {p}) on the {fabrication_grid} nm grid",
                        c.wall
                    ),
                ));
            }
        }
        let rising = spec.f_start.value() < spec.f_end.value();
        let falling = spec.f_start.value() > spec.f_end.value();
        let monotone = columns
            .windows(2)
            .all(|w| (!rising || w[0].wall <= w[1].wall) && (!falling || w[0].wall >= w[1].wall));
        if !monotone {
            return Err(Error::invalid(
                "gradient design",
                "walls are not monotone in the direction of the ramp",
            ));
        }
        Ok(GradientDesign {
            spec,
            fabrication_grid,
            columns,
        })
    }

    pub fn spec(&self) -> &GradientSpec {
        &self.spec
    }

    pub fn fabrication_grid(&self) -> Nm {
        self.fabrication_grid
    }

    pub fn columns(&self) -> &[GradientColumn] {
        &self.columns
    }

    pub fn walls(&self) -> Vec<Nm> {
        self.columns.iter().map(|c| c.wall).collect()
    }

    pub fn length_m(&self) -> f64 {
        self.spec.length as f64 * 1e-9
    }

    /// Column containing `x_nm`; the last column extends to the channel end.
    pub fn column_at(&self, x_nm: f64) -> usize {
        let k = (x_nm / self.spec.pitch as f64).floor().max(0.0) as usize;
        k.min(self.columns.len() - 1)
    }

    /// Fraction realized by column `k` under the design's measure.
    pub fn fraction_at_column(&self, k: usize) -> Fraction {
        self.spec
            .measure
            .fraction_of_wall(self.columns[k].wall, self.spec.pitch)
    }

    /// Same channel with the column order reversed.
    pub fn reversed(&self) -> GradientDesign {
        let spec = GradientSpec {
            f_start: self.spec.f_end,
            f_end: self.spec.f_start,
            ..self.spec
        };
        let columns = self
            .columns
            .iter()
            .rev()
            .enumerate()
            .map(|(k, c)| GradientColumn {
                x: k as Nm * spec.pitch,
                wall: c.wall,
            })
            .collect();
        GradientDesign {
            spec,
            fabrication_grid: self.fabrication_grid,
            columns,
        }
    }

    /// The channel start `[0, length) × [0, lateral_width)`, for previews of long designs.
    pub fn crop(&self, length: Nm, lateral_width: Nm) -> Result<GradientDesign> {
        let p = self.spec.pitch;
        let length = length.min(self.spec.length);
        if length < p || lateral_width <= 0 {
            return Err(Error::invalid(
                "gradient crop",
                format!("{length}×{lateral_width} nm must span at least one {p} nm column"),
            ));
        }
        let spec = GradientSpec {
            length,
            lateral_width: lateral_width.min(self.spec.lateral_width),
            ..self.spec
        };
        let columns = self.columns[..spec.column_count()].to_vec();
        GradientDesign::from_columns(spec, self.fabrication_grid, columns)
    }

    /// Cells of the channel `[0, length) × [0, lateral_width)`.
    pub fn cell_grid(&self) -> CellGrid {
        let p = self.spec.pitch;
        CellGrid::new(
            Rect::new(0, 0, self.spec.length, self.spec.lateral_width),
            LatticeFrame::new(p, self.fabrication_grid),
            Openings::Columns(self.columns.iter().map(|c| p - c.wall).collect()),
        )
    }

    /// Opening polygon of column `k`, unclipped and centred on the origin.
    pub fn column_opening(&self, k: usize) -> crate::lattice::Polygon {
        hexagon_opening(self.spec.pitch - self.columns[k].wall)
    }
}

/// Linear fraction ramp: column `k` of `N` targets
/// `f_start + (f_end − f_start)·k/(N − 1)`, then snaps to the grid of `rules`.
pub fn design_linear_gradient(spec: &GradientSpec, rules: &DesignRules) -> Result<GradientDesign> {
    let n = spec.column_count();
    let (f0, f1) = (spec.f_start.value(), spec.f_end.value());
    let grid = rules.fabrication_grid();
    let columns = (0..n)
        .map(|k| {
            let t = if n > 1 {
                k as f64 / (n - 1) as f64
            } else {
                0.0
            };
            let f = Fraction::new((f0 + (f1 - f0) * t).clamp(0.0, 1.0))?;
            let wall = wall_for_fraction_on_grid(f, spec.pitch, spec.measure, grid)?;
            Ok(GradientColumn {
                x: k as Nm * spec.pitch,
                wall,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let walls: Vec<Nm> = columns.iter().map(|c| c.wall).collect();
    let violations = check_design_rules(
        DrcTarget::Walls {
            pitch: spec.pitch,
            height: spec.height,
            walls: &walls,
        },
        rules,
    );
    if let Some(first) = violations.first() {
        return Err(Error::DesignRule(format!(
            "{first} ({} violations in total)",
            violations.len()
        )));
    }
    GradientDesign::from_columns(*spec, grid, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: f64) -> Fraction {
        Fraction::new(v).unwrap()
    }

    fn reference_ramp(measure: FractionMeasure) -> GradientSpec {
        GradientSpec::new(10_000_000, 1_000_000, 4000, f(0.10), f(0.25), measure, 4000).unwrap()
    }

    #[test]
    fn wall_examples() {
        assert_eq!(
            wall_for_fraction(f(0.25), 4000, FractionMeasure::LinearRatio).unwrap(),
            1000
        );
        assert_eq!(
            wall_for_fraction(f(0.19), 4000, FractionMeasure::AreaFraction).unwrap(),
            400
        );
        assert_eq!(
            wall_for_fraction(f(0.4375), 4000, FractionMeasure::AreaFraction).unwrap(),
            1000
        );
    }

    #[test]
    fn degenerate_fractions_error() {
        // 0.001·4000 = 4 nm snaps to 0 on a 10 nm grid.
        assert!(wall_for_fraction(f(0.001), 4000, FractionMeasure::LinearRatio).is_err());
        assert!(wall_for_fraction(f(0.0), 4000, FractionMeasure::LinearRatio).is_err());
        assert!(wall_for_fraction(f(0.999), 4000, FractionMeasure::LinearRatio).is_err());
        // 0.00125·4000 = 5 nm rounds half-up to one grid step.
        assert_eq!(
            wall_for_fraction(f(0.00125), 4000, FractionMeasure::LinearRatio).unwrap(),
            10
        );
    }

    #[test]
    fn reference_ramp_endpoints() {
        let d = design_linear_gradient(
            &reference_ramp(FractionMeasure::LinearRatio),
            &DesignRules::default(),
        )
        .unwrap();
        assert_eq!(d.columns().len(), 2500);
        assert_eq!(d.columns()[0], GradientColumn { x: 0, wall: 400 });
        assert_eq!(d.columns()[2499].wall, 1000);
        assert!(d.columns().windows(2).all(|w| w[0].wall <= w[1].wall));
    }

    #[test]
    fn uniform_ramp() {
        let spec = GradientSpec::new(
            400_000,
            10_000,
            4000,
            f(0.2),
            f(0.2),
            FractionMeasure::LinearRatio,
            4000,
        )
        .unwrap();
        let d = design_linear_gradient(&spec, &DesignRules::default()).unwrap();
        assert_eq!(d.columns().len(), 100);
        assert!(d.columns().iter().all(|c| c.wall == 800));
    }

    #[test]
    fn ramp_below_min_wall_is_rejected() {
        let spec = GradientSpec::new(
            400_000,
            10_000,
            4000,
            f(0.05),
            f(0.25),
            FractionMeasure::LinearRatio,
            4000,
        )
        .unwrap();
        assert!(matches!(
            design_linear_gradient(&spec, &DesignRules::default()),
            Err(Error::DesignRule(_))
        ));
    }

    #[test]
    fn single_column_channel() {
        let spec = GradientSpec::new(
            5000,
            5000,
            4000,
            f(0.1),
            f(0.25),
            FractionMeasure::LinearRatio,
            4000,
        )
        .unwrap();
        let d = design_linear_gradient(&spec, &DesignRules::default()).unwrap();
        assert_eq!(d.columns().len(), 1);
        assert_eq!(d.column_at(4999.0), 0);
    }

    #[test]
    fn spec_validation() {
        let m = FractionMeasure::LinearRatio;
        assert!(GradientSpec::new(3000, 10, 4000, f(0.1), f(0.2), m, 4000).is_err());
        assert!(GradientSpec::new(8000, 10, 4000, f(0.0), f(0.2), m, 4000).is_err());
        assert!(GradientSpec::new(8000, 0, 4000, f(0.1), f(1.0), m, 4000)
            .unwrap_err()
            .to_string()
            .contains("f_end"));
    }

    #[test]
    fn design_json_round_trip_revalidates() {
        let spec = GradientSpec::new(
            40_000,
            10_000,
            4000,
            f(0.19),
            f(0.4375),
            FractionMeasure::AreaFraction,
            4000,
        )
        .unwrap();
        let d = design_linear_gradient(&spec, &DesignRules::default()).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<GradientDesign>(&text).unwrap(), d);
        let tampered = text.replacen("\"wall\":400", "\"wall\":4000", 1);
        assert!(serde_json::from_str::<GradientDesign>(&tampered).is_err());
    }

    #[test]
    fn reversal_mirrors_columns() {
        let d = design_linear_gradient(
            &reference_ramp(FractionMeasure::LinearRatio),
            &DesignRules::default(),
        )
        .unwrap();
        let r = d.reversed();
        assert_eq!(r.columns()[0].wall, 1000);
        assert_eq!(r.columns()[2499].wall, 400);
        assert_eq!(r.reversed(), d);
    }

    #[test]
    fn cell_grid_uses_column_openings() {
        let spec = GradientSpec::new(
            40_000,
            10_000,
            4000,
            f(0.1),
            f(0.25),
            FractionMeasure::LinearRatio,
            4000,
        )
        .unwrap();
        let d = design_linear_gradient(&spec, &DesignRules::default()).unwrap();
        let g = d.cell_grid();
        assert_eq!(g.diameter_at(0), 3600);
        assert_eq!(g.diameter_at(39_999), 3000);
        // rows at y = 0, 3460, 6920; ten centres per row.
        assert_eq!(g.len(), 30);
    }

    #[test]
    fn crop_keeps_leading_columns() {
        let d = design_linear_gradient(
            &reference_ramp(FractionMeasure::LinearRatio),
            &DesignRules::default(),
        )
        .unwrap();
        let c = d.crop(100_000, 20_000).unwrap();
        assert_eq!(c.columns(), &d.columns()[..25]);
        assert_eq!(c.spec().lateral_width(), 20_000);
        assert_eq!(d.crop(50_000_000, 50_000_000).unwrap(), d);
        assert!(d.crop(1000, 1000).is_err());
    }
}
