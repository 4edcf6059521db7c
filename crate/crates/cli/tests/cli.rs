use std::path::Path;
use std::process::Command;

use lotus_cli::run;

fn lotus(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("lotus").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn value(text: &str, key: &str) -> String {
    let prefix = format!("{key}=");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("{key} missing in\n{text}"))
        .to_string()
}

#[test]
fn angle_evaluation() {
    let (code, out, _) = lotus(&["angle", "--f", "0.19", "--theta", "81"]);
    assert_eq!(code, 0);
    let a: f64 = value(&out, "theta_star_deg").parse().unwrap();
    assert!((a - 141.28).abs() < 0.01);

    let (code, out, _) = lotus(&["angle", "--apparent", "141.2859856357785", "--theta", "81"]);
    assert_eq!(code, 0);
    assert!((value(&out, "f").parse::<f64>().unwrap() - 0.19).abs() < 1e-12);

    let (_, out, _) = lotus(&[
        "angle",
        "--f",
        "0.25",
        "--theta",
        "81",
        "--hysteresis",
        "10",
    ]);
    let adv: f64 = value(&out, "theta_star_advancing_deg").parse().unwrap();
    assert!((adv - 137.1015136187172).abs() < 1e-9);
}

#[test]
fn usage_and_domain_errors() {
    assert_eq!(lotus(&["angle", "--unknown"]).0, 2);
    assert_eq!(lotus(&[]).0, 2);
    assert_eq!(lotus(&["frobnicate"]).0, 2);
    let (code, _, err) = lotus(&["angle", "--f", "1.5"]);
    assert_eq!(code, 1);
    assert!(err.contains("error:"));
    assert_eq!(lotus(&["angle", "--f", "0.2", "--theta", "200"]).0, 1);
    assert_eq!(lotus(&["check"]).0, 2);
    assert_eq!(lotus(&["--help"]).0, 0);
}

#[test]
fn json_output() {
    let (code, out, _) = lotus(&["--json", "fraction", "--wall", "1000"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["f_linear"], 0.25);
    assert_eq!(v["f_area"], 0.4375);
}

#[test]
fn pillar_fraction() {
    let (code, out, _) = lotus(&[
        "fraction",
        "--pillar-width",
        "1000",
        "--pillar-spacing",
        "3000",
    ]);
    assert_eq!(code, 0);
    assert_eq!(value(&out, "f_area"), "0.0625");
}

#[test]
fn monte_carlo_is_reproducible() {
    let args = [
        "fraction",
        "--wall",
        "400",
        "--mc-samples",
        "200000",
        "--seed",
        "3",
    ];
    let (_, a, _) = lotus(&args);
    let (_, b, _) = lotus(&args);
    let (_, c, _) = lotus(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn design_check_export_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, err) = lotus(&[
        "--out-dir",
        d,
        "design",
        "two-zone",
        "--preset",
        "paper-designs",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(value(&out, "total_cells"), "14455000");
    let design = dir.path().join("two_zone.json");
    let design = design.to_str().unwrap();

    assert_eq!(lotus(&["check", design]).0, 0);

    let (code, out, _) = lotus(&[
        "--out-dir",
        d,
        "export",
        design,
        "--format",
        "gdsii",
        "--output",
        "m.gds",
    ]);
    assert_eq!(code, 0);
    let bytes = std::fs::read(dir.path().join("m.gds")).unwrap();
    assert!(bytes.len() < 10_000);
    assert_eq!(value(&out, "bytes"), bytes.len().to_string());

    let (code, _, err) = lotus(&["--out-dir", d, "export", design, "--format", "svg"]);
    assert_eq!(code, 1);
    assert!(err.contains("crop"));
    let (code, _, _) = lotus(&[
        "--out-dir",
        d,
        "export",
        design,
        "--format",
        "svg",
        "--crop-um",
        "50,50",
    ]);
    assert_eq!(code, 0);
    let svg = std::fs::read_to_string(dir.path().join("two-zone.svg")).unwrap();
    assert!(svg.starts_with("<?xml"));

    let (code, out, _) = lotus(&["stats", design]);
    assert_eq!(code, 0);
    assert_eq!(value(&out, "zone1.f_area"), "0.19");
}

#[test]
fn failing_design_rules_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"height": 10000, "zones": [{"wall": 1000}, {"wall": 400}]}"#,
    )
    .unwrap();
    let (code, out, _) = lotus(&["--config", cfg.to_str().unwrap(), "check"]);
    assert_eq!(code, 1);
    assert!(out.contains("aspect"), "{out}");
    assert_eq!(value(&out, "result"), "fail");
}

#[test]
fn config_errors_list_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"material": {"name": "x", "theta_flat": 200, "surface_tension": 0}}"#,
    )
    .unwrap();
    let (code, _, err) = lotus(&["--config", cfg.to_str().unwrap(), "angle", "--f", "0.5"]);
    assert_eq!(code, 1);
    assert!(
        err.contains("material.theta_flat") && err.contains("material.surface_tension"),
        "{err}"
    );
    assert_eq!(lotus(&["--config", "/nonexistent/c.json", "report"]).0, 1);
}

#[test]
fn gradient_design_and_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _, err) = lotus(&["--out-dir", d, "design", "gradient"]);
    assert_eq!(code, 0, "{err}");
    let g = dir.path().join("gradient.json");
    let (code, out, _) = lotus(&[
        "--out-dir",
        d,
        "simulate",
        g.to_str().unwrap(),
        "--trace",
        "t.csv",
    ]);
    assert_eq!(code, 0);
    assert_eq!(value(&out, "terminal_reason"), "reached_end");
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "position_m,theta_front_deg,theta_rear_deg,net_force_N,moved"
    );

    let (_, out, _) = lotus(&["simulate", "--hysteresis", "20"]);
    assert_eq!(value(&out, "terminal_reason"), "force_balance");
    assert_eq!(value(&out, "steps"), "1");

    let (code, _, _) = lotus(&["--out-dir", d, "design", "gradient", "--f-start", "0.05"]);
    assert_eq!(code, 1);
}

#[test]
fn outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let d = dir.to_str().unwrap();
        assert_eq!(
            lotus(&[
                "--out-dir",
                d,
                "export",
                "--preset",
                "paper-designs",
                "--format",
                "gdsii"
            ])
            .0,
            0
        );
    }
    let read = |p: &Path| std::fs::read(p.join("two-zone.gds")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_eq!(
        lotus(&["report"]).1,
        lotus(&["report", "--paper-designs"]).1
    );
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_lotus"))
        .args(["design", "two-zone", "--preset", "paper-designs"])
        .env("LOTUS_OUT_DIR", dir.path())
        .current_dir(dir.path().parent().unwrap())
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(dir.path().join("two_zone.json").exists());
    let status = Command::new(env!("CARGO_BIN_EXE_lotus"))
        .arg("--nope")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}
