//! Project configuration files: strict JSON, unknown keys rejected.
//!
//! Every section and field is optional. A minimal valid file is `{"material": {"name": "water"}}`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lotus_core::gradient::FractionMeasure;
use lotus_core::lattice::{DesignRules, HoneycombSpec, Nm};
use lotus_core::wetting::{Material, PMMA_WATER_THETA, WATER_SURFACE_TENSION};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "paper-designs")]
    PaperDesigns,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientDefaults {
    pub length: Nm,
    pub lateral_width: Nm,
    pub f_start: f64,
    pub f_end: f64,
    pub measure: FractionMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationDefaults {
    /// Droplet volume, µl.
    pub volume_ul: f64,
    /// Start position of the droplet centre, mm from the channel start.
    pub position_mm: f64,
    /// Step length, m; the pitch when absent.
    pub step_m: Option<f64>,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloDefaults {
    pub samples: u64,
    pub seed: u64,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectConfig {
    pub material: Material,
    pub design_rules: DesignRules,
    pub pitch: Nm,
    pub height: Nm,
    /// Fraction measure used for single-value predictions.
    pub measure: FractionMeasure,
    pub preset: Option<Preset>,
    /// Zone specs for `design two-zone` when no preset is chosen.
    pub zones: Option<(HoneycombSpec, HoneycombSpec)>,
    pub gradient: GradientDefaults,
    pub simulation: SimulationDefaults,
    pub monte_carlo: MonteCarloDefaults,
    pub output_dir: Option<PathBuf>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        RawConfig::default().validate().expect("defaults are valid")
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    material: Option<RawMaterial>,
    design_rules: Option<RawRules>,
    pitch: Option<Nm>,
    height: Option<Nm>,
    measure: Option<FractionMeasure>,
    preset: Option<Preset>,
    zones: Option<[RawZone; 2]>,
    gradient: Option<RawGradient>,
    simulation: Option<RawSimulation>,
    monte_carlo: Option<RawMonteCarlo>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    name: String,
    theta_flat: Option<f64>,
    hysteresis: Option<f64>,
    surface_tension: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRules {
    min_wall: Option<Nm>,
    max_aspect_ratio: Option<f64>,
    max_height: Option<Nm>,
    fabrication_grid: Option<Nm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawZone {
    wall: Nm,
    pitch: Option<Nm>,
    height: Option<Nm>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGradient {
    length: Option<Nm>,
    lateral_width: Option<Nm>,
    f_start: Option<f64>,
    f_end: Option<f64>,
    measure: Option<FractionMeasure>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    volume_ul: Option<f64>,
    position_mm: Option<f64>,
    step_m: Option<f64>,
    max_steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    samples: Option<u64>,
    seed: Option<u64>,
    threads: Option<usize>,
}

impl RawConfig {
    fn validate(self) -> Result<ProjectConfig, Vec<String>> {
        let mut problems = Vec::new();

        let m = self.material.unwrap_or(RawMaterial {
            name: "water/PMMA".into(),
            theta_flat: None,
            hysteresis: None,
            surface_tension: None,
        });
        let theta = m.theta_flat.unwrap_or(PMMA_WATER_THETA);
        let hyst = m.hysteresis.unwrap_or(0.0);
        let gamma = m.surface_tension.unwrap_or(WATER_SURFACE_TENSION);
        let material_problems = Material::problems(theta, hyst, gamma);
        let material = Material::new(m.name, theta, hyst, gamma).ok();

        let defaults = DesignRules::default();
        let r = self.design_rules.unwrap_or_default();
        let rule_values = (
            r.min_wall.unwrap_or(defaults.min_wall()),
            r.max_aspect_ratio.unwrap_or(defaults.max_aspect_ratio()),
            r.max_height.unwrap_or(defaults.max_height()),
            r.fabrication_grid.unwrap_or(defaults.fabrication_grid()),
        );
        let rule_problems =
            DesignRules::problems(rule_values.0, rule_values.1, rule_values.2, rule_values.3);
        let rules =
            DesignRules::new(rule_values.0, rule_values.1, rule_values.2, rule_values.3).ok();

        let mut out: Vec<String> = Vec::new();
        out.extend(
            material_problems
                .into_iter()
                .map(|p| format!("material.{p}")),
        );
        out.extend(
            rule_problems
                .into_iter()
                .map(|p| format!("design_rules.{p}")),
        );

        let pitch = self.pitch.unwrap_or(4000);
        let height = self.height.unwrap_or(4000);
        require(
            &mut problems,
            pitch > 0,
            format!("pitch: {pitch} must be > 0 nm"),
        );
        require(
            &mut problems,
            height > 0,
            format!("height: {height} must be > 0 nm"),
        );

        let mut zones = None;
        if let Some([a, b]) = self.zones {
            if self.preset.is_some() {
                problems.push("zones: cannot be combined with preset".into());
            }
            let mut build = |i: usize, z: RawZone| match HoneycombSpec::new(
                z.pitch.unwrap_or(pitch),
                z.wall,
                z.height.unwrap_or(height),
            ) {
                Ok(s) => Some(s),
                Err(e) => {
                    problems.push(format!("zones[{i}]: {e}"));
                    None
                }
            };
            let (sa, sb) = (build(0, a), build(1, b));
            zones = sa.zip(sb);
        }

        let g = self.gradient.unwrap_or_default();
        let gradient = GradientDefaults {
            length: g.length.unwrap_or(10_000_000),
            lateral_width: g.lateral_width.unwrap_or(1_000_000),
            f_start: g.f_start.unwrap_or(0.10),
            f_end: g.f_end.unwrap_or(0.25),
            measure: g.measure.unwrap_or(FractionMeasure::LinearRatio),
        };
        require(
            &mut problems,
            gradient.length > 0,
            format!("gradient.length: {} must be > 0 nm", gradient.length),
        );
        require(
            &mut problems,
            gradient.lateral_width > 0,
            format!(
                "gradient.lateral_width: {} must be > 0 nm",
                gradient.lateral_width
            ),
        );
        for (name, f) in [("f_start", gradient.f_start), ("f_end", gradient.f_end)] {
            require(
                &mut problems,
                f > 0.0 && f < 1.0,
                format!("gradient.{name}: {f} is not in (0, 1)"),
            );
        }

        let s = self.simulation.unwrap_or_default();
        let simulation = SimulationDefaults {
            volume_ul: s.volume_ul.unwrap_or(1.1),
            position_mm: s.position_mm.unwrap_or(1.0),
            step_m: s.step_m,
            max_steps: s
                .max_steps
                .unwrap_or(lotus_core::gradient::DEFAULT_MAX_STEPS),
        };
        require(
            &mut problems,
            simulation.volume_ul.is_finite() && simulation.volume_ul > 0.0,
            format!("simulation.volume_ul: {} must be > 0", simulation.volume_ul),
        );
        require(
            &mut problems,
            simulation.position_mm.is_finite() && simulation.position_mm >= 0.0,
            format!(
                "simulation.position_mm: {} must be >= 0",
                simulation.position_mm
            ),
        );
        if let Some(step) = simulation.step_m {
            require(
                &mut problems,
                step.is_finite() && step > 0.0,
                format!("simulation.step_m: {step} must be > 0"),
            );
        }
        require(
            &mut problems,
            simulation.max_steps > 0,
            "simulation.max_steps: must be > 0".into(),
        );

        let mc = self.monte_carlo.unwrap_or_default();
        let monte_carlo = MonteCarloDefaults {
            samples: mc.samples.unwrap_or(1_000_000),
            seed: mc.seed.unwrap_or(0),
            threads: mc.threads,
        };
        require(
            &mut problems,
            monte_carlo.samples >= 1000,
            format!(
                "monte_carlo.samples: {} must be >= 1000",
                monte_carlo.samples
            ),
        );
        if let Some(t) = monte_carlo.threads {
            require(
                &mut problems,
                t > 0,
                "monte_carlo.threads: must be > 0".into(),
            );
        }

        out.extend(problems);
        match (material, rules) {
            (Some(material), Some(design_rules)) if out.is_empty() => Ok(ProjectConfig {
                material,
                design_rules,
                pitch,
                height,
                measure: self.measure.unwrap_or(FractionMeasure::AreaFraction),
                preset: self.preset,
                zones,
                gradient,
                simulation,
                monte_carlo,
                output_dir: self.output_dir,
            }),
            _ => Err(out),
        }
    }
}

fn require(problems: &mut Vec<String>, ok: bool, msg: String) {
    if !ok {
        problems.push(msg);
    }
}

/// Parse and validate a config document. `origin` names the source in errors.
pub fn parse_config(text: &str, origin: &str) -> Result<ProjectConfig, CliError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
        path: origin.to_string(),
        problems: vec![format!("line {} column {}: {e}", e.line(), e.column())],
    })?;
    raw.validate().map_err(|problems| CliError::Config {
        path: origin.to_string(),
        problems,
    })
}

pub fn load_config(path: &Path) -> Result<ProjectConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problems(text: &str) -> Vec<String> {
        match parse_config(text, "t.json") {
            Err(CliError::Config { problems, .. }) => problems,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_config(r#"{"material": {"name": "water"}}"#, "t").unwrap();
        assert_eq!(c.material.name(), "water");
        assert_eq!(c.material.theta_flat(), 81.0);
        assert_eq!(c.material.hysteresis(), 0.0);
        assert_eq!(c.material.surface_tension(), 72.8e-3);
        assert_eq!(c.design_rules, DesignRules::default());
        assert_eq!(c.pitch, 4000);
        assert_eq!(c.measure, FractionMeasure::AreaFraction);
        assert_eq!(
            c,
            ProjectConfig {
                material: c.material.clone(),
                ..ProjectConfig::default()
            }
        );
    }

    #[test]
    fn bad_theta_names_the_field() {
        let p = problems(r#"{"material": {"name": "w", "theta_flat": 200}}"#);
        assert_eq!(p.len(), 1);
        assert!(p[0].starts_with("material.theta_flat"), "{p:?}");
    }

    #[test]
    fn all_violations_are_listed() {
        let p = problems(
            r#"{"material": {"name": "w", "theta_flat": 200, "surface_tension": -1},
                "design_rules": {"min_wall": 0}, "gradient": {"f_end": 1.5},
                "monte_carlo": {"samples": 10}}"#,
        );
        assert_eq!(p.len(), 5, "{p:?}");
        assert!(p.iter().any(|s| s.starts_with("design_rules.min_wall")));
        assert!(p.iter().any(|s| s.starts_with("gradient.f_end")));
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let p = problems("{\n  \"materail\": {}\n}");
        assert!(p[0].contains("line 2"), "{p:?}");
        assert!(p[0].contains("materail"));
        assert!(!problems(r#"{"material": {"name": "w", "theta": 80}}"#).is_empty());
    }

    #[test]
    fn preset_and_zones() {
        let c = parse_config(r#"{"preset": "paper-designs"}"#, "t").unwrap();
        assert_eq!(c.preset, Some(Preset::PaperDesigns));
        let c = parse_config(r#"{"zones": [{"wall": 1000}, {"wall": 400}]}"#, "t").unwrap();
        let (a, b) = c.zones.unwrap();
        assert_eq!(a, HoneycombSpec::paper_design_1());
        assert_eq!(b, HoneycombSpec::paper_design_2());
        assert!(!problems(r#"{"zones": [{"wall": 5000}, {"wall": 400}]}"#).is_empty());
    }
}
