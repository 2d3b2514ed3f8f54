//! End-to-end tests of the `wellposed` binary: exit-code contract, emitted
//! CSV/JSON shapes and the region-grid round trip.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use wellposed::cli::{region_from_csv, region_to_csv};
use wellposed::filter::Regime;
use wellposed::verdict::{region_sweep, Axis};

use common::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wellposed"))
}

fn write_params(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn check_well_posed_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "table1.toml", BASELINE_TOML);
    let out = run(&[
        "check",
        "--params",
        params.to_str().unwrap(),
        "--regime",
        "r",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "WellPosed");
    assert_eq!(v["reason"], "HorizonBelowExplosion");
    assert!(v["details"]["max_lambda"].as_f64().unwrap() < 0.5);
}

#[test]
fn check_not_guaranteed_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASELINE_TOML.replace("theta = 0.3", "theta = 0.5");
    let params = write_params(dir.path(), "theta05.toml", &cfg);
    let out = run(&[
        "check",
        "--params",
        params.to_str().unwrap(),
        "--regime",
        "f",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "NotGuaranteed");
    assert_eq!(v["reason"], "RiccatiExploded");
}

#[test]
fn errors_exit_two() {
    let out = run(&["check", "--params", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let cfg = BASELINE_TOML.replace("theta = 0.3", "theta = 1.2");
    let params = write_params(dir.path(), "bad.toml", &cfg);
    let out = run(&["check", "--params", params.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));
}

#[test]
fn region_row_count_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "table1.toml", BASELINE_TOML);
    let out_path = dir.path().join("region.csv");
    let out = run(&[
        "region",
        "--params",
        params.to_str().unwrap(),
        "--axis1",
        "theta:-0.5:0.9:57",
        "--axis2",
        "T:0.05:2:40",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "axis1,axis2,status,reason,delta_psi,T_E,max_lambda"
    );
    assert_eq!(lines.len(), 1 + 57 * 40, "header plus one row per cell");
    assert!(!dir.path().join("region.tmp").exists(), "no temp leftovers");

    // Re-reading reproduces the in-process sweep cell-for-cell.
    let p = baseline();
    let thetas: Vec<f64> = (0..57).map(|i| -0.5 + 1.4 * i as f64 / 56.0).collect();
    let horizons: Vec<f64> = (0..40).map(|i| 0.05 + 1.95 * i as f64 / 39.0).collect();
    let grid = region_sweep(
        &p,
        (Axis::Theta, &thetas),
        (Axis::T, &horizons),
        Regime::F,
        2000,
    )
    .unwrap();
    let parsed = region_from_csv(&text, Axis::Theta, Axis::T).unwrap();
    assert_eq!(parsed.cells, grid.cells);
    assert_eq!(region_to_csv(&grid).unwrap(), text);
}

#[test]
fn riccati_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "table1.toml", BASELINE_TOML);
    let out = run(&[
        "riccati",
        "--params",
        params.to_str().unwrap(),
        "--steps",
        "500",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,A_11,B_1,C");
    assert_eq!(lines.len(), 1 + 501);
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - A0).abs() < 1e-3, "A(0) column");
    let last: Vec<f64> = lines[501].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[1..], [0.0, 0.0, 0.0], "terminal values");
}

#[test]
fn filter_csv_jump_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{BASELINE_TOML}expert_gamma = [[0.1]]\nexpert_arrivals = [0.5]\n");
    let params = write_params(dir.path(), "expert.toml", &cfg);
    let out = run(&[
        "filter",
        "--params",
        params.to_str().unwrap(),
        "--regime",
        "z",
        "--steps",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,Q_11,jump");
    // 201 grid rows plus one extra pre-jump row at the arrival node.
    assert_eq!(lines.len(), 1 + 202);
    let minus: Vec<&str> = lines
        .iter()
        .filter(|l| l.ends_with(",minus"))
        .copied()
        .collect();
    let plus: Vec<&str> = lines
        .iter()
        .filter(|l| l.ends_with(",plus"))
        .copied()
        .collect();
    assert_eq!(minus.len(), 1);
    assert_eq!(plus.len(), 1);
    let q_minus: f64 = minus[0].split(',').nth(1).unwrap().parse().unwrap();
    let q_plus: f64 = plus[0].split(',').nth(1).unwrap().parse().unwrap();
    assert!(q_plus < q_minus, "jump reduces the variance");
}

#[test]
fn bound_json_keys() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "table1.toml", BASELINE_TOML);
    let out = run(&[
        "bound",
        "--params",
        params.to_str().unwrap(),
        "--regime",
        "r",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in [
        "regime",
        "bound",
        "d00",
        "K",
        "a",
        "C0H",
        "eigenvalues_of_K",
    ] {
        assert!(v.get(key).is_some(), "missing key {key}");
    }
    // Documented stable key order.
    let positions: Vec<usize> = [
        "\"regime\"",
        "\"bound\"",
        "\"d00\"",
        "\"K\"",
        "\"a\"",
        "\"C0H\"",
        "\"eigenvalues_of_K\"",
    ]
    .iter()
    .map(|k| text.find(k).unwrap())
    .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    assert!((v["bound"].as_f64().unwrap() - PARTIAL_BOUND).abs() / PARTIAL_BOUND < 1e-3);

    let out_f = run(&[
        "bound",
        "--params",
        params.to_str().unwrap(),
        "--regime",
        "f",
    ]);
    let vf: serde_json::Value = serde_json::from_slice(&out_f.stdout).unwrap();
    assert!(vf["K"].is_null());
    assert!((vf["bound"].as_f64().unwrap() - 6.3088).abs() < 1e-3);
}

#[test]
fn bound_log_utility_marker() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASELINE_TOML.replace("theta = 0.3", "theta = 0.0");
    let params = write_params(dir.path(), "log.toml", &cfg);
    let out = run(&[
        "bound",
        "--params",
        params.to_str().unwrap(),
        "--regime",
        "r",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bound"], "finite");
}

#[test]
fn oracle_gauss_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "table1.toml", BASELINE_TOML);
    let out = run(&[
        "oracle",
        "--params",
        params.to_str().unwrap(),
        "--target",
        "gauss",
        "--n",
        "200000",
        "--seed",
        "42",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["target"], "gauss");
    assert_eq!(v["verdict"], "PASS");
    assert!(v["z_score"].as_f64().unwrap() <= 3.0);
}

#[test]
fn output_file_is_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "table1.toml", BASELINE_TOML);
    let out_path = dir.path().join("verdict.json");
    let out = run(&[
        "check",
        "--params",
        params.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_path.exists());
    assert!(!dir.path().join("verdict.tmp").exists());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["status"], "WellPosed");
}

#[test]
fn format_flag_validated_per_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), "table1.toml", BASELINE_TOML);
    let p = params.to_str().unwrap();

    let out = run(&["check", "--params", p, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2), "check cannot emit csv");

    let out = run(&[
        "riccati", "--params", p, "--steps", "200", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(2), "riccati cannot emit json");

    let out = run(&[
        "region",
        "--params",
        p,
        "--axis1",
        "theta:0.1:0.5:3",
        "--axis2",
        "T:0.5:1:2",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["axis1"], "theta");
    assert_eq!(v["cells"].as_array().unwrap().len(), 6);
}
