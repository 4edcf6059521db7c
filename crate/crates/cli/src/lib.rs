//! The `lotus` command line: wetting calculations, honeycomb and gradient design,
//! design-rule checks, droplet transport simulation and mask export.

pub mod config;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use lotus_core::gradient::{
    design_linear_gradient, simulate_droplet, FractionMeasure, GradientDesign, GradientSpec,
};
use lotus_core::lattice::{
    build_two_zone_layout, check_design_rules, honeycomb_area_fraction, honeycomb_linear_ratio,
    monte_carlo_fraction, monte_carlo_fraction_with_threads, square_pillar_fraction, DrcTarget,
    HoneycombSpec, Layout, Nm, PillarSpec,
};
use lotus_core::maskio::{
    layout_stats_with, write_gdsii, write_svg_with, GdsError, GdsMode, GdsOptions, Pattern,
    Polarity, SvgOptions,
};
use lotus_core::wetting::{
    apparent_advancing_receding, cassie_apparent_angle, invert_cassie_fraction, Droplet, Fraction,
    Material,
};

pub use config::{load_config, parse_config, Preset, ProjectConfig};
pub use report::ValidationReport;

/// Environment variable naming the output directory when `--out-dir` is absent.
pub const OUT_DIR_ENV: &str = "LOTUS_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] lotus_core::Error),
    #[error(transparent)]
    Gds(#[from] GdsError),
    #[error("{path}: {}", problems.join("\n  "))]
    Config { path: String, problems: Vec<String> },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {msg}", path.display())]
    DesignFile { path: PathBuf, msg: String },
    #[error("{0} design rule violation(s)")]
    RulesViolated(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Saved output of `design`, read back by `check`, `simulate`, `export` and `stats`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignFile {
    Layout(Layout),
    Gradient(GradientDesign),
}

impl DesignFile {
    pub fn pattern(&self) -> Pattern<'_> {
        match self {
            DesignFile::Layout(l) => Pattern::Layout(l),
            DesignFile::Gradient(g) => Pattern::Gradient(g),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::DesignFile {
            path: path.into(),
            msg: e.to_string(),
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lotus",
    version,
    about = "Superhydrophobic honeycomb surface design"
)]
struct Cli {
    /// Project config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for written artifacts [env: LOTUS_OUT_DIR].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apparent contact angle on a composite surface, or the fraction for a target angle.
    Angle(AngleArgs),
    /// Surface fractions of a honeycomb or square-pillar texture.
    Fraction(FractionArgs),
    /// Build a two-zone layout or a wettability-gradient design file.
    #[command(subcommand)]
    Design(DesignCommand),
    /// Design-rule check.
    Check(SourceArgs),
    /// Quasi-static droplet transport along a gradient design.
    Simulate(SimulateArgs),
    /// Write a GDSII mask or an SVG preview.
    Export(ExportArgs),
    /// Predicted angles next to the built-in measurements.
    Report(ReportArgs),
    /// Cell counts, fractions, aspect ratios and predicted angles.
    Stats(SourceArgs),
}

#[derive(Debug, Args)]
struct AngleArgs {
    /// Surface fraction in [0, 1].
    #[arg(
        long = "f",
        conflicts_with = "apparent",
        required_unless_present = "apparent"
    )]
    f: Option<f64>,
    /// Invert: the fraction giving this apparent angle, degrees.
    #[arg(long)]
    apparent: Option<f64>,
    /// Flat-surface angle, degrees [default: config or 81].
    #[arg(long)]
    theta: Option<f64>,
    /// Advancing minus receding angle on the flat surface, degrees.
    #[arg(long)]
    hysteresis: Option<f64>,
}

#[derive(Debug, Args)]
struct FractionArgs {
    /// Honeycomb pitch, nm [default: config or 4000].
    #[arg(long, conflicts_with_all = ["pillar_width", "pillar_spacing"])]
    pitch: Option<Nm>,
    /// Honeycomb wall thickness, nm.
    #[arg(long, required_unless_present = "pillar_width")]
    wall: Option<Nm>,
    /// Square pillar width a, nm.
    #[arg(long, requires = "pillar_spacing", conflicts_with = "wall")]
    pillar_width: Option<Nm>,
    /// Square pillar spacing b, nm.
    #[arg(long, requires = "pillar_width")]
    pillar_spacing: Option<Nm>,
    /// Also estimate the area fraction by Monte Carlo with this many samples.
    #[arg(long)]
    mc_samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum DesignCommand {
    /// Two abutting 10×10 mm honeycomb zones.
    TwoZone(TwoZoneArgs),
    /// Linear surface-fraction ramp along a channel.
    Gradient(GradientArgs),
}

#[derive(Debug, Args)]
struct TwoZoneArgs {
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Wall of zone A, nm.
    #[arg(long, requires = "wall_b", conflicts_with = "preset")]
    wall_a: Option<Nm>,
    /// Wall of zone B, nm.
    #[arg(long, requires = "wall_a")]
    wall_b: Option<Nm>,
    /// File name of the design (relative to the output directory).
    #[arg(long, default_value = "two_zone.json")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct GradientArgs {
    /// Channel length, µm.
    #[arg(long)]
    length_um: Option<f64>,
    /// Channel width, µm.
    #[arg(long)]
    width_um: Option<f64>,
    #[arg(long)]
    f_start: Option<f64>,
    #[arg(long)]
    f_end: Option<f64>,
    #[arg(long, value_enum)]
    measure: Option<MeasureArg>,
    /// nm.
    #[arg(long)]
    pitch: Option<Nm>,
    /// nm.
    #[arg(long)]
    height: Option<Nm>,
    #[arg(long, default_value = "gradient.json")]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    PaperDesigns,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureArg {
    Linear,
    Area,
}

impl From<MeasureArg> for FractionMeasure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Linear => FractionMeasure::LinearRatio,
            MeasureArg::Area => FractionMeasure::AreaFraction,
        }
    }
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Design file written by `design`.
    design: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "design")]
    preset: Option<PresetArg>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Gradient design file; the configured ramp when absent.
    design: Option<PathBuf>,
    #[arg(long)]
    volume_ul: Option<f64>,
    /// Start position of the droplet centre, mm.
    #[arg(long)]
    position_mm: Option<f64>,
    /// Step length, m [default: pitch].
    #[arg(long)]
    step_m: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Overrides the material hysteresis, degrees.
    #[arg(long)]
    hysteresis: Option<f64>,
    /// Write the per-step trace as CSV to this file (relative to the output directory).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Gdsii,
    Svg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Arrayed,
    Flat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolarityArg {
    Openings,
    Walls,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum)]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "arrayed")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "openings")]
    polarity: PolarityArg,
    /// Keep only the lower-left W,H µm of the design.
    #[arg(long, value_parser = parse_crop)]
    crop_um: Option<(f64, f64)>,
    #[arg(long, default_value_t = 1)]
    layer: i16,
    /// Layer for openings with `--polarity walls` [default: layer + 1].
    #[arg(long)]
    cutout_layer: Option<i16>,
    #[arg(long, default_value_t = 0)]
    datatype: i16,
    /// Set BGNLIB/BGNSTR dates (year,month,day,hour,minute,second) instead of zeros.
    #[arg(long, value_parser = parse_timestamp)]
    timestamp: Option<[i16; 6]>,
    /// SVG scale, nm per pixel.
    #[arg(long, default_value_t = 100.0)]
    scale_nm_per_px: f64,
    /// SVG cell limit.
    #[arg(long, default_value_t = 50_000)]
    max_cells: usize,
    /// File name (relative to the output directory) [default: <label>.gds or .svg].
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report the two fabricated designs (the default unless the config lists zones).
    #[arg(long)]
    paper_designs: bool,
}

fn parse_crop(s: &str) -> Result<(f64, f64), String> {
    let (w, h) = s.split_once(',').ok_or("expected W,H")?;
    let w: f64 = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h: f64 = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err("crop sizes must be positive".into());
    }
    Ok((w, h))
}

fn parse_timestamp(s: &str) -> Result<[i16; 6], String> {
    let parts: Vec<i16> = s
        .split(',')
        .map(|p| p.trim().parse::<i16>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|_| "expected six comma-separated integers".to_string())
}

fn um_to_nm(um: f64) -> Result<Nm, CliError> {
    let nm = (um * 1000.0).round();
    if !(nm.is_finite() && nm > 0.0 && nm < i64::MAX as f64) {
        return Err(CliError::Usage(format!("{um} µm is not a positive length")));
    }
    Ok(nm as Nm)
}

struct Context<'a> {
    config: ProjectConfig,
    out_dir: PathBuf,
    json: bool,
    out: &'a mut dyn Write,
}

impl Context<'_> {
    fn artifact(&self, name: &Path) -> PathBuf {
        if name.is_absolute() {
            name.to_path_buf()
        } else {
            self.out_dir.join(name)
        }
    }

    fn write_file(&mut self, name: &Path, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.artifact(name);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.into(),
                source,
            })?;
        }
        std::fs::write(&path, bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    fn print(&mut self, text: &str) -> Result<(), CliError> {
        self.out
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
    }

    fn lines(&mut self, pairs: &[(&str, String)]) -> Result<(), CliError> {
        let text: String = pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        self.print(&text)
    }

    fn emit_json<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.print(&text)
    }

    fn preset_layout(&self) -> Result<Layout, CliError> {
        Ok(build_two_zone_layout(
            HoneycombSpec::paper_design_1(),
            HoneycombSpec::paper_design_2(),
        )?)
    }

    fn source(&self, args: &SourceArgs) -> Result<DesignFile, CliError> {
        match (&args.design, args.preset) {
            (Some(path), _) => DesignFile::load(path),
            (None, Some(PresetArg::PaperDesigns)) => Ok(DesignFile::Layout(self.preset_layout()?)),
            (None, None) => match (self.config.preset, self.config.zones) {
                (Some(Preset::PaperDesigns), _) => Ok(DesignFile::Layout(self.preset_layout()?)),
                (None, Some((a, b))) => Ok(DesignFile::Layout(build_two_zone_layout(a, b)?)),
                (None, None) => Err(CliError::Usage(
                    "no design given: pass a design file or --preset paper-designs".into(),
                )),
            },
        }
    }
}

/// Run with `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => ProjectConfig::default(),
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from("."));
    let mut ctx = Context {
        config,
        out_dir,
        json: cli.json,
        out,
    };
    match cli.command {
        Command::Angle(a) => angle(&mut ctx, a),
        Command::Fraction(a) => fraction(&mut ctx, a),
        Command::Design(DesignCommand::TwoZone(a)) => design_two_zone(&mut ctx, a),
        Command::Design(DesignCommand::Gradient(a)) => design_gradient(&mut ctx, a),
        Command::Check(a) => check(&mut ctx, a),
        Command::Simulate(a) => simulate(&mut ctx, a),
        Command::Export(a) => export(&mut ctx, a),
        Command::Report(a) => report(&mut ctx, a),
        Command::Stats(a) => stats(&mut ctx, a),
    }
}

fn angle(ctx: &mut Context<'_>, a: AngleArgs) -> Result<(), CliError> {
    let base = &ctx.config.material;
    let material = Material::new(
        base.name(),
        a.theta.unwrap_or(base.theta_flat()),
        a.hysteresis.unwrap_or(base.hysteresis()),
        base.surface_tension(),
    )?;
    let theta = material.theta_flat();
    if let Some(apparent) = a.apparent {
        let f = invert_cassie_fraction(apparent, theta)?.value();
        if ctx.json {
            return ctx.emit_json(
                &serde_json::json!({ "theta_flat_deg": theta, "theta_star_deg": apparent, "f": f }),
            );
        }
        return ctx.lines(&[
            ("theta_flat_deg", theta.to_string()),
            ("theta_star_deg", apparent.to_string()),
            ("f", f.to_string()),
        ]);
    }
    let f = Fraction::new(a.f.expect("required by clap"))?;
    let star = cassie_apparent_angle(f, theta)?;
    let (adv, rec) = apparent_advancing_receding(f, &material)?;
    if ctx.json {
        return ctx.emit_json(&serde_json::json!({
            "f": f.value(), "theta_flat_deg": theta, "theta_star_deg": star,
            "hysteresis_deg": material.hysteresis(), "theta_star_advancing_deg": adv, "theta_star_receding_deg": rec,
        }));
    }
    let mut lines = vec![
        ("f", f.value().to_string()),
        ("theta_flat_deg", theta.to_string()),
        ("theta_star_deg", star.to_string()),
    ];
    if material.hysteresis() > 0.0 {
        lines.push(("hysteresis_deg", material.hysteresis().to_string()));
        lines.push(("theta_star_advancing_deg", adv.to_string()));
        lines.push(("theta_star_receding_deg", rec.to_string()));
    }
    ctx.lines(&lines)
}

fn fraction(ctx: &mut Context<'_>, a: FractionArgs) -> Result<(), CliError> {
    if let (Some(width), Some(spacing)) = (a.pillar_width, a.pillar_spacing) {
        let spec = PillarSpec::new(width, spacing, ctx.config.height)?;
        let f = square_pillar_fraction(&spec).value();
        if ctx.json {
            return ctx.emit_json(&serde_json::json!({ "pillar_width_nm": width, "pillar_spacing_nm": spacing, "f_area": f }));
        }
        return ctx.lines(&[
            ("pillar_width_nm", width.to_string()),
            ("pillar_spacing_nm", spacing.to_string()),
            ("f_area", f.to_string()),
        ]);
    }
    let pitch = a.pitch.unwrap_or(ctx.config.pitch);
    let spec = HoneycombSpec::new(pitch, a.wall.expect("required by clap"), ctx.config.height)?;
    let linear = honeycomb_linear_ratio(&spec).value();
    let area = honeycomb_area_fraction(&spec).value();
    let mc = match a.mc_samples {
        Some(n) => {
            let seed = a.seed.unwrap_or(ctx.config.monte_carlo.seed);
            Some(match a.threads.or(ctx.config.monte_carlo.threads) {
                Some(t) => monte_carlo_fraction_with_threads(&spec, n, seed, t)?,
                None => monte_carlo_fraction(&spec, n, seed)?,
            })
        }
        None => None,
    };
    if ctx.json {
        return ctx.emit_json(&serde_json::json!({
            "pitch_nm": pitch, "wall_nm": spec.wall(), "comb_diameter_nm": spec.comb_diameter(),
            "f_linear": linear, "f_area": area,
            "monte_carlo": mc.map(|e| serde_json::json!({
                "f_area": e.fraction, "std_error": e.std_error, "samples": e.samples, "solid_hits": e.solid_hits,
            })),
        }));
    }
    let mut lines = vec![
        ("pitch_nm", pitch.to_string()),
        ("wall_nm", spec.wall().to_string()),
        ("comb_diameter_nm", spec.comb_diameter().to_string()),
        ("f_linear", linear.to_string()),
        ("f_area", area.to_string()),
    ];
    if let Some(e) = mc {
        lines.push(("mc_f_area", e.fraction.to_string()));
        lines.push(("mc_std_error", e.std_error.to_string()));
        lines.push(("mc_samples", e.samples.to_string()));
    }
    ctx.lines(&lines)
}

fn save_design(
    ctx: &mut Context<'_>,
    name: &Path,
    design: &DesignFile,
) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(design).expect("serializable");
    text.push('\n');
    ctx.write_file(name, text.as_bytes())
}

fn design_two_zone(ctx: &mut Context<'_>, a: TwoZoneArgs) -> Result<(), CliError> {
    let layout = match (a.preset, a.wall_a.zip(a.wall_b)) {
        (Some(PresetArg::PaperDesigns), _) => ctx.preset_layout()?,
        (None, Some((wa, wb))) => {
            let (p, h) = (ctx.config.pitch, ctx.config.height);
            build_two_zone_layout(HoneycombSpec::new(p, wa, h)?, HoneycombSpec::new(p, wb, h)?)?
        }
        (None, None) => match ctx.source(&SourceArgs {
            design: None,
            preset: None,
        }) {
            Ok(DesignFile::Layout(l)) => l,
            _ => ctx.preset_layout()?,
        },
    };
    let violations = check_design_rules(DrcTarget::Layout(&layout), &ctx.config.design_rules);
    let path = save_design(ctx, &a.output, &DesignFile::Layout(layout.clone()))?;
    stats_out(ctx, Pattern::Layout(&layout), Some(&path))?;
    drc_result(violations.iter().map(|v| v.to_string()).collect())
}

fn design_gradient(ctx: &mut Context<'_>, a: GradientArgs) -> Result<(), CliError> {
    let g = &ctx.config.gradient;
    let length = a.length_um.map(um_to_nm).transpose()?.unwrap_or(g.length);
    let width = a
        .width_um
        .map(um_to_nm)
        .transpose()?
        .unwrap_or(g.lateral_width);
    let spec = GradientSpec::new(
        length,
        width,
        a.pitch.unwrap_or(ctx.config.pitch),
        Fraction::new(a.f_start.unwrap_or(g.f_start))?,
        Fraction::new(a.f_end.unwrap_or(g.f_end))?,
        a.measure.map(FractionMeasure::from).unwrap_or(g.measure),
        a.height.unwrap_or(ctx.config.height),
    )?;
    let design = design_linear_gradient(&spec, &ctx.config.design_rules)?;
    let path = save_design(ctx, &a.output, &DesignFile::Gradient(design.clone()))?;
    stats_out(ctx, Pattern::Gradient(&design), Some(&path))
}

fn drc_result(violations: Vec<String>) -> Result<(), CliError> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::RulesViolated(violations.len()))
    }
}

fn check(ctx: &mut Context<'_>, a: SourceArgs) -> Result<(), CliError> {
    let design = ctx.source(&a)?;
    let rules = ctx.config.design_rules;
    let violations = match &design {
        DesignFile::Layout(l) => check_design_rules(DrcTarget::Layout(l), &rules),
        DesignFile::Gradient(g) => {
            let walls = g.walls();
            check_design_rules(
                DrcTarget::Walls {
                    pitch: g.spec().pitch(),
                    height: g.spec().height(),
                    walls: &walls,
                },
                &rules,
            )
        }
    };
    let messages: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    if ctx.json {
        ctx.emit_json(&serde_json::json!({ "rules": rules, "pass": messages.is_empty(), "violations": messages }))?;
    } else {
        let mut text = format!(
            "rules: min_wall_nm={} max_aspect_ratio={} max_height_nm={} fabrication_grid_nm={}\n",
            rules.min_wall(),
            rules.max_aspect_ratio(),
            rules.max_height(),
            rules.fabrication_grid()
        );
        for m in &messages {
            text.push_str(&format!("violation: {m}\n"));
        }
        text.push_str(&format!(
            "result={}\n",
            if messages.is_empty() { "pass" } else { "fail" }
        ));
        ctx.print(&text)?;
    }
    drc_result(messages)
}

fn simulate(ctx: &mut Context<'_>, a: SimulateArgs) -> Result<(), CliError> {
    let design = match &a.design {
        Some(path) => match DesignFile::load(path)? {
            DesignFile::Gradient(g) => g,
            DesignFile::Layout(_) => {
                return Err(CliError::DesignFile {
                    path: path.clone(),
                    msg: "simulate needs a gradient design".into(),
                })
            }
        },
        None => {
            let g = &ctx.config.gradient;
            let spec = GradientSpec::new(
                g.length,
                g.lateral_width,
                ctx.config.pitch,
                Fraction::new(g.f_start)?,
                Fraction::new(g.f_end)?,
                g.measure,
                ctx.config.height,
            )?;
            design_linear_gradient(&spec, &ctx.config.design_rules)?
        }
    };
    let s = &ctx.config.simulation;
    let material = match a.hysteresis {
        Some(h) => ctx.config.material.with_hysteresis(h)?,
        None => ctx.config.material.clone(),
    };
    let volume_ul = a.volume_ul.unwrap_or(s.volume_ul);
    let position_mm = a.position_mm.unwrap_or(s.position_mm);
    let step = a
        .step_m
        .or(s.step_m)
        .unwrap_or(design.spec().pitch() as f64 / 1e9);
    let max_steps = a.max_steps.unwrap_or(s.max_steps);
    let droplet = Droplet::new(volume_ul * 1e-9, position_mm * 1e-3)?;
    let trace = simulate_droplet(&design, &droplet, &material, step, max_steps)?;
    let trace_path = match &a.trace {
        Some(name) => Some(ctx.write_file(name, trace.to_csv().as_bytes())?),
        None => None,
    };
    let first = trace.steps.first();
    if ctx.json {
        return ctx.emit_json(&serde_json::json!({
            "volume_ul": volume_ul, "start_position_m": droplet.position(), "step_m": step,
            "terminal_reason": trace.terminal_reason, "final_position_m": trace.final_position,
            "steps": trace.steps.len(), "start_net_force_N": first.map(|s| s.net_force),
            "start_retention_N": first.map(|s| s.retention), "trace_csv": trace_path,
        }));
    }
    let reason = serde_json::to_value(trace.terminal_reason).expect("serializable");
    let mut lines = vec![
        ("volume_ul", volume_ul.to_string()),
        ("start_position_m", droplet.position().to_string()),
        ("step_m", step.to_string()),
        ("steps", trace.steps.len().to_string()),
        (
            "terminal_reason",
            reason.as_str().unwrap_or_default().to_string(),
        ),
        ("final_position_m", trace.final_position.to_string()),
    ];
    if let Some(f) = first {
        lines.push(("start_net_force_N", f.net_force.to_string()));
        lines.push(("start_retention_N", f.retention.to_string()));
    }
    if let Some(p) = trace_path {
        lines.push(("trace_csv", p.display().to_string()));
    }
    ctx.lines(&lines)
}

fn export(ctx: &mut Context<'_>, a: ExportArgs) -> Result<(), CliError> {
    let mut design = ctx.source(&a.source)?;
    if let Some((w, h)) = a.crop_um {
        let (w, h) = (um_to_nm(w)?, um_to_nm(h)?);
        design = match design {
            DesignFile::Layout(l) => DesignFile::Layout(l.crop(w, h)),
            DesignFile::Gradient(g) => DesignFile::Gradient(g.crop(w, h)?),
        };
    }
    let polarity = match a.polarity {
        PolarityArg::Openings => Polarity::Openings,
        PolarityArg::Walls => Polarity::Walls,
    };
    let pattern = design.pattern();
    let default_name = |ext: &str| {
        let label: String = pattern
            .label()
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        PathBuf::from(format!(
            "{}.{ext}",
            if label.is_empty() { "mask" } else { &label }
        ))
    };
    let (bytes, name) = match a.format {
        FormatArg::Gdsii => {
            let opts = GdsOptions {
                layer: a.layer,
                datatype: a.datatype,
                cutout_layer: a.cutout_layer.unwrap_or(a.layer.saturating_add(1)),
                mode: match a.mode {
                    ModeArg::Arrayed => GdsMode::Arrayed,
                    ModeArg::Flat => GdsMode::Flat,
                },
                polarity,
                timestamp: a.timestamp,
                ..GdsOptions::default()
            };
            (
                write_gdsii(pattern, &opts)?,
                a.output.clone().unwrap_or_else(|| default_name("gds")),
            )
        }
        FormatArg::Svg => {
            let opts = SvgOptions {
                scale_nm_per_px: a.scale_nm_per_px,
                max_cells: a.max_cells,
                polarity,
            };
            (
                write_svg_with(pattern, &opts)?.into_bytes(),
                a.output.clone().unwrap_or_else(|| default_name("svg")),
            )
        }
    };
    let cells = pattern.cell_count();
    let path = ctx.write_file(&name, &bytes)?;
    if ctx.json {
        return ctx
            .emit_json(&serde_json::json!({ "path": path, "bytes": bytes.len(), "cells": cells }));
    }
    ctx.lines(&[
        ("path", path.display().to_string()),
        ("bytes", bytes.len().to_string()),
        ("cells", cells.to_string()),
    ])
}

fn report(ctx: &mut Context<'_>, a: ReportArgs) -> Result<(), CliError> {
    let c = &ctx.config;
    let r = match c.zones {
        Some((za, zb)) if !a.paper_designs && c.preset.is_none() => ValidationReport::new(
            &[("zone A".into(), za), ("zone B".into(), zb)],
            &c.material,
            &c.design_rules,
        ),
        _ => ValidationReport::paper_designs(&c.material, &c.design_rules),
    };
    if ctx.json {
        ctx.emit_json(&r)
    } else {
        ctx.print(&r.to_string())
    }
}

fn stats_out(
    ctx: &mut Context<'_>,
    pattern: Pattern<'_>,
    saved: Option<&Path>,
) -> Result<(), CliError> {
    let s = layout_stats_with(pattern, &ctx.config.material);
    if ctx.json {
        return ctx.emit_json(&serde_json::json!({ "design_file": saved, "stats": s }));
    }
    let mut text = String::new();
    if let Some(p) = saved {
        text.push_str(&format!("design_file={}\n", p.display()));
    }
    text.push_str(&s.to_string());
    ctx.print(&text)
}

fn stats(ctx: &mut Context<'_>, a: SourceArgs) -> Result<(), CliError> {
    let design = ctx.source(&a)?;
    stats_out(ctx, design.pattern(), None)
}
