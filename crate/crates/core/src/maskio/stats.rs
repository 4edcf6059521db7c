use std::fmt;

use serde::Serialize;

use super::Pattern;
use crate::gradient::FractionMeasure;
use crate::lattice::{Nm, Rect};
use crate::wetting::{cassie_apparent_angle, Fraction, Material};

/// Closed interval; `min == max` for uniform regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Range> {
        values.into_iter().fold(None, |acc, v| {
            Some(match acc {
                None => Range { min: v, max: v },
                Some(r) => Range {
                    min: r.min.min(v),
                    max: r.max.max(v),
                },
            })
        })
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.min == self.max {
            write!(f, "{}", self.min)
        } else {
            write!(f, "{}..{}", self.min, self.max)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionStats {
    pub label: String,
    pub extent_nm: Rect,
    pub cells: usize,
    pub pitch_nm: Nm,
    pub wall_nm: Range,
    pub height_nm: Nm,
    pub f_linear: Range,
    pub f_area: Range,
    pub aspect_ratio: Range,
    /// Apparent angle predicted from each fraction measure, degrees.
    pub cassie_linear_deg: Range,
    pub cassie_area_deg: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternStats {
    pub label: String,
    pub theta_flat_deg: f64,
    pub total_cells: usize,
    pub regions: Vec<RegionStats>,
}

/// Summary with predicted angles for water on PMMA.
pub fn layout_stats(pattern: Pattern<'_>) -> PatternStats {
    layout_stats_with(pattern, &Material::water_on_pmma())
}

pub fn layout_stats_with(pattern: Pattern<'_>, material: &Material) -> PatternStats {
    let theta = material.theta_flat();
    let grids = pattern.cell_grids();
    let region =
        |label: String, extent: Rect, cells: usize, pitch: Nm, height: Nm, walls: &[Nm]| {
            let fr = |m: FractionMeasure| {
                Range::of(walls.iter().map(|&w| m.fraction_of_wall(w, pitch).value()))
            };
            let angle = |m: FractionMeasure| {
                Range::of(
                    walls
                        .iter()
                        .map(|&w| predicted(m.fraction_of_wall(w, pitch), theta)),
                )
            };
            let empty = Range { min: 0.0, max: 0.0 };
            RegionStats {
                label,
                extent_nm: extent,
                cells,
                pitch_nm: pitch,
                wall_nm: Range::of(walls.iter().map(|&w| w as f64)).unwrap_or(empty),
                height_nm: height,
                f_linear: fr(FractionMeasure::LinearRatio).unwrap_or(empty),
                f_area: fr(FractionMeasure::AreaFraction).unwrap_or(empty),
                aspect_ratio: Range::of(walls.iter().map(|&w| height as f64 / w as f64))
                    .unwrap_or(empty),
                cassie_linear_deg: angle(FractionMeasure::LinearRatio).unwrap_or(empty),
                cassie_area_deg: angle(FractionMeasure::AreaFraction).unwrap_or(empty),
            }
        };
    let regions: Vec<RegionStats> = match pattern {
        Pattern::Layout(l) => l
            .zones()
            .iter()
            .zip(&grids)
            .enumerate()
            .map(|(i, (z, g))| {
                let s = z.spec();
                region(
                    format!("zone{i}"),
                    *z.extent(),
                    g.len(),
                    s.pitch(),
                    s.height(),
                    &[s.wall()],
                )
            })
            .collect(),
        Pattern::Gradient(d) => {
            let s = d.spec();
            let g = &grids[0];
            vec![region(
                "gradient".into(),
                *g.extent(),
                g.len(),
                s.pitch(),
                s.height(),
                &d.walls(),
            )]
        }
    };
    PatternStats {
        label: pattern.label().to_string(),
        theta_flat_deg: theta,
        total_cells: regions.iter().map(|r| r.cells).sum(),
        regions,
    }
}

fn predicted(f: Fraction, theta: f64) -> f64 {
    // Fractions of valid walls lie in (0, 1), where the angle always exists.
    cassie_apparent_angle(f, theta).unwrap_or(f64::NAN)
}

impl fmt::Display for PatternStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "label={}", self.label)?;
        writeln!(f, "theta_flat_deg={}", self.theta_flat_deg)?;
        writeln!(f, "regions={}", self.regions.len())?;
        writeln!(f, "total_cells={}", self.total_cells)?;
        for r in &self.regions {
            let p = &r.label;
            let e = &r.extent_nm;
            writeln!(f, "{p}.extent_nm={},{},{},{}", e.x, e.y, e.width, e.height)?;
            writeln!(f, "{p}.cells={}", r.cells)?;
            writeln!(f, "{p}.pitch_nm={}", r.pitch_nm)?;
            writeln!(f, "{p}.wall_nm={}", r.wall_nm)?;
            writeln!(f, "{p}.height_nm={}", r.height_nm)?;
            writeln!(f, "{p}.f_linear={}", r.f_linear)?;
            writeln!(f, "{p}.f_area={}", r.f_area)?;
            writeln!(f, "{p}.aspect_ratio={}", r.aspect_ratio)?;
            writeln!(f, "{p}.cassie_linear_deg={}", r.cassie_linear_deg)?;
            writeln!(f, "{p}.cassie_area_deg={}", r.cassie_area_deg)?;
        }
        Ok(())
    }
}
