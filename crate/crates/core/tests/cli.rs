use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use resonance_lab::cli::bundled_model;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resonance-lab")).args(args).output().expect("run resonance-lab")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn golden(name: &str) -> Vec<u8> {
    fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

#[test]
fn trapping_sweep_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = bundled_model("two_level_trapping");
    let out = run(&[
        "sweep", "--model", path(&model), "--out", path(dir.path()), "--param", "g", "--from", "0.1013", "--to", "0.9013",
        "--steps", "17",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(dir.path().join("sweep.csv")).unwrap(), golden("trapping_sweep.csv"));
    assert_eq!(fs::read(dir.path().join("exceptional_points.json")).unwrap(), golden("trapping_exceptional_points.json"));
    let m = manifest(dir.path());
    assert_eq!(m["command"], "sweep");
    assert_eq!(m["all_passed"], true);
    assert!(m["invariants"].as_array().unwrap().iter().any(|i| i["name"] == "width sum rule (relative)"));
}

#[test]
fn malformed_model_file_is_an_input_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("broken.toml");
    fs::write(&model, "size = 2\n[hamiltonian\ndiagonal = [0.0, 1.0]\n").unwrap();
    let out = run(&["spectrum", "--model", path(&model), "--out", path(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("broken.toml:2:"), "{err}");
    assert!(err.starts_with("error[model/"), "{err}");
}

#[test]
fn missing_grid_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = bundled_model("two_level_trapping");
    let out = run(&["sweep", "--model", path(&model), "--out", path(dir.path()), "--param", "g"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["bic", "--model", path(&model), "--out", path(dir.path()), "--param", "nope", "--from", "0", "--to", "1", "--steps", "5"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn spectrum_reports_informational_antisymmetry() {
    let dir = tempfile::tempdir().unwrap();
    let model = bundled_model("four_level_crossover");
    let out = run(&["spectrum", "--model", path(&model), "--out", path(dir.path()), "--energy", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(dir.path());
    let inv = m["invariants"].as_array().unwrap();
    let b = inv.iter().find(|i| i["name"] == "B antisymmetry residual").unwrap();
    assert_eq!(b["enforced"], false);
    assert!(inv.iter().filter(|i| i["enforced"] == true).all(|i| i["passed"] == true));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn scan_marks_closed_channels() {
    let dir = tempfile::tempdir().unwrap();
    let model = bundled_model("chain_lead");
    let out = run(&[
        "scan", "--model", path(&model), "--out", path(dir.path()), "--energy-from", "-0.5", "--energy-to", "1.5",
        "--energy-steps", "9",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows[0].contains("nan"), "below threshold: {}", rows[0]);
    assert!(!rows[5].contains("nan"), "inside band: {}", rows[5]);
}

#[test]
fn trace_and_oracle_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let model = bundled_model("flatband_level");
    let out = run(&["trace", "--model", path(&model), "--out", path(&dir.path().join("trace")), "--t-steps", "11"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("trace/trace.csv")).unwrap().lines().count(), 12);

    let out = run(&["oracle", "--model", path(&model), "--out", path(&dir.path().join("oracle")), "--bins", "400", "--t-steps", "21"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir.path().join("oracle"));
    assert_eq!(m["artifacts"][0], "oracle.csv");
}

#[test]
fn wideband_oracle_needs_a_window() {
    let dir = tempfile::tempdir().unwrap();
    let model = bundled_model("one_level");
    let out = run(&["oracle", "--model", path(&model), "--out", path(dir.path()), "--bins", "200"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["oracle", "--model", path(&model), "--out", path(dir.path()), "--bins", "400", "--window", "-20", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(manifest(dir.path())["warnings"].as_array().is_some_and(|w| !w.is_empty()));
}
