//! Binary-level tests: exit codes, artifact round-trips, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn limitop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_limitop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, command: &str, spec: &str, extra: &[&str]) -> Output {
    let spec_path = fixture(spec);
    let mut args = vec![
        command,
        "--spec",
        spec_path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    limitop(&args)
}

#[test]
fn inspect_reports_propagation_and_schur_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "inspect", "shift.json", &[]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("propagation 1"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("inspect.json")).unwrap())
            .unwrap();
    assert_eq!(report["propagation"], 1);
    assert!((report["norm_bound"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn fredholm_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run_in(dir.path(), "fredholm", "shift.json", &[]);
    assert_eq!(ok.status.code(), Some(0));

    let not_fredholm = run_in(dir.path(), "fredholm", "i_minus_s.json", &[]);
    assert_eq!(not_fredholm.status.code(), Some(2));
}

#[test]
fn parse_errors_exit_one_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"schema\": \"bandop-spec/1\",\n  oops\n}").unwrap();
    let out = limitop(&[
        "inspect",
        "--spec",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "{stderr}");

    let missing = limitop(&[
        "inspect",
        "--spec",
        "/nonexistent/spec.json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn inconclusive_extraction_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // more survivors demanded than centers exist
    let out = run_in(
        dir.path(),
        "limitops",
        "two_sided_diag.json",
        &["--centers", "8", "--min-survivors", "9"],
    );
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("limitops.json")).unwrap())
            .unwrap();
    assert_eq!(report["outcome"], "inconclusive");
}

#[test]
fn identical_configs_give_byte_identical_artifacts() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for dir in [&d1, &d2] {
        let out = run_in(
            dir.path(),
            "fredholm",
            "two_sided_shift.json",
            &["--seed", "7"],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(d1.path().join("fredholm.json")).unwrap();
    let b = std::fs::read(d2.path().join("fredholm.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reports_reparse_under_published_types() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "fredholm", "two_sided_shift.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("fredholm.json")).unwrap();
    let report: limitop::fredholm::FredholmReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.classes.len(), 2);

    let out = run_in(dir.path(), "crosscheck", "shift.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("crosscheck.json")).unwrap();
    let report: limitop::fredholm::CrosscheckReport = serde_json::from_str(&text).unwrap();
    assert!(report.pass);

    let out = run_in(
        dir.path(),
        "lowernorm",
        "laplacian_minus_5.json",
        &["--radii", "1:10:1"],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("lowernorm.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let _curve: limitop::lowernorm::LowerNormCurve =
        serde_json::from_value(value["curve"].clone()).unwrap();
}

#[test]
fn csv_format_emits_tabular_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "lowernorm",
        "laplacian_minus_5.json",
        &["--radii", "1:5:1", "--format", "csv"],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("lowernorm.csv")).unwrap();
    assert!(csv.starts_with("r,nu\n"));
    assert_eq!(csv.lines().count(), 6);

    let out = run_in(
        dir.path(),
        "ghost",
        "cycles_averaging.json",
        &["--radii", "0:120:40", "--format", "csv"],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("ghost.csv")).unwrap();
    assert!(csv.starts_with("n,m\n"));
}

#[test]
fn manifest_written_for_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "window", "laplacian_minus_5.json", &["--f-radius", "6", "--radii", "2:4:2"]);
    assert_eq!(out.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "window");
    assert_eq!(manifest["schema"], "bandop-spec/1");
}
