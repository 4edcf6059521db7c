//! Fabrication design-rule checks. Violations are data; an empty list passes.

use std::fmt;

use serde::Serialize;

use super::{DesignRules, HoneycombSpec, Layout, Nm};

/// Relative slack on the aspect-ratio limit, so a ratio equal to the limit passes.
const ASPECT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    MinWall,
    MaxAspectRatio,
    MaxHeight,
    FabricationGrid,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::MinWall => "min_wall",
            Rule::MaxAspectRatio => "max_aspect_ratio",
            Rule::MaxHeight => "max_height",
            Rule::FabricationGrid => "fabrication_grid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    /// Where the value was found, e.g. `zone@(0,0)` or `column 17`.
    pub location: String,
    pub value: f64,
    pub limit: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.rule {
            Rule::MinWall => "<",
            Rule::MaxAspectRatio | Rule::MaxHeight => ">",
            Rule::FabricationGrid => "off grid",
        };
        write!(
            f,
            "{} at {}: {} {} {}",
            self.rule, self.location, self.value, rel, self.limit
        )
    }
}

/// What to check.
#[derive(Debug, Clone, Copy)]
pub enum DrcTarget<'a> {
    Spec(&'a HoneycombSpec),
    Layout(&'a Layout),
    /// A column-wise wall profile sharing one pitch and height.
    Walls {
        pitch: Nm,
        height: Nm,
        walls: &'a [Nm],
    },
}

pub fn check_design_rules(target: DrcTarget<'_>, rules: &DesignRules) -> Vec<Violation> {
    let mut out = Vec::new();
    match target {
        DrcTarget::Spec(spec) => check_cell(
            spec.pitch(),
            spec.wall(),
            spec.height(),
            "spec",
            rules,
            &mut out,
        ),
        DrcTarget::Layout(layout) => {
            for z in layout.zones() {
                let s = z.spec();
                let at = format!("zone@({},{})", z.extent().x, z.extent().y);
                check_cell(s.pitch(), s.wall(), s.height(), &at, rules, &mut out);
            }
        }
        DrcTarget::Walls {
            pitch,
            height,
            walls,
        } => {
            for (k, &w) in walls.iter().enumerate() {
                check_cell(pitch, w, height, &format!("column {k}"), rules, &mut out);
            }
        }
    }
    out.sort_by(|a, b| {
        (a.rule, &a.location)
            .cmp(&(b.rule, &b.location))
            .then(a.value.total_cmp(&b.value))
    });
    out
}

fn check_cell(
    pitch: Nm,
    wall: Nm,
    height: Nm,
    at: &str,
    rules: &DesignRules,
    out: &mut Vec<Violation>,
) {
    let mut push = |rule, value: f64, limit: f64| {
        out.push(Violation {
            rule,
            location: at.to_string(),
            value,
            limit,
        })
    };
    if wall < rules.min_wall() {
        push(Rule::MinWall, wall as f64, rules.min_wall() as f64);
    }
    let aspect = height as f64 / wall as f64;
    if aspect > rules.max_aspect_ratio() * (1.0 + ASPECT_SLACK) {
        push(Rule::MaxAspectRatio, aspect, rules.max_aspect_ratio());
    }
    if height > rules.max_height() {
        push(Rule::MaxHeight, height as f64, rules.max_height() as f64);
    }
    let grid = rules.fabrication_grid();
    for v in [pitch, wall] {
        if v % grid != 0 {
            push(Rule::FabricationGrid, v as f64, grid as f64);
        }
    }
}
