//! The binary end to end: exit codes, diagnostics and byte-stable output.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn heatsing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatsing"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn unknown_command_exits_2() {
    let out = heatsing(&["levitate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("levitate"));
}

#[test]
fn malformed_config_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"curve": {"kind": "circle", "N": 3, "T": 1.0}, "points": [], "tolerence": 1e-8}"#,
    );
    let out = heatsing(&["field", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tolerence"), "{err}");

    let cfg = write(
        dir.path(),
        "bad2.json",
        r#"{"curve": {"kind": "spiral", "N": 3, "T": 1.0}}"#,
    );
    let out = heatsing(&["moll", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("curve.kind"));

    let out = heatsing(&[
        "moll",
        "--config",
        &dir.path().join("missing.json").to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_check_exits_0_and_writes_versioned_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = heatsing(&["oracle-check", "--out", &out_dir.to_string_lossy()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(out_dir.join("oracle-check.csv")).unwrap();
    assert!(csv.starts_with("# heatsing oracle-check v1\n"));
    assert!(!csv.contains('\r'));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("oracle-check.json")).unwrap())
            .unwrap();
    assert_eq!(json["schema"], "heatsing/oracle-check/v1");
    assert!(json["max_relative_error"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn asymptote_reports_the_reference_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.json",
        r#"{"curve": {"kind": "circle", "N": 3, "T": 1.0}}"#,
    );
    let out = heatsing(&["asymptote", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = 1.0 / (4.0 * std::f64::consts::PI);
    assert!((json["reference_constant"].as_f64().unwrap() - c).abs() < 1e-15);
    assert!((json["estimate"].as_f64().unwrap() - 0.0795775).abs() < 1e-3 * c);
}

#[test]
fn failed_expectation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"field": {"kind": "distance_power", "power": 1.0},
            "locus": {"curve": {"kind": "circle", "N": 3, "T": 1.0}},
            "time_samples": 4, "seed": 2, "expect": "removable"}"#,
    );
    let out = heatsing(&["classify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["verdict"], "non_removable");
}

#[test]
fn module_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    // a rough curve at this tolerance exhausts the panel budget
    let cfg = write(
        dir.path(),
        "f.json",
        r#"{"curve": {"kind": "weierstrass", "alpha": 0.6, "N": 3, "T": 1.0},
            "points": [{"x": [0.1, 0.0, 0.0], "t": 0.5}], "tolerance": 1e-14}"#,
    );
    let out = heatsing(&["field", "--config", &cfg]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.json",
        r#"{"manifold": {"kind": "circle", "N": 4, "radius": 1.0}, "radii": [0.2, 0.1, 0.05], "samples": 50000}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = heatsing(&[
            "verify-tube",
            "--config",
            &cfg,
            "--seed",
            "42",
            "--threads",
            "1",
            "--out",
            &d.to_string_lossy(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let ca = fs::read(a.join("verify-tube.csv")).unwrap();
    assert_eq!(ca, fs::read(b.join("verify-tube.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("verify-tube.json")).unwrap(),
        fs::read(b.join("verify-tube.json")).unwrap()
    );

    // a seed is required for Monte Carlo commands
    let out = heatsing(&["verify-tube", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.is_object(), "{}", path.display());
    }
}
