//! End-to-end tests of the `nhsim` binary: exit codes, schema rejection,
//! artifact layout, and report determinism.

use std::path::Path;
use std::process::{Command, Output};

fn nhsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn list_experiments_names_all_kinds() {
    let out = nhsim(&["list-experiments"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in [
        "gadget-sweep",
        "distance-check",
        "dilation-equivalence",
        "trotter-order",
        "trajectory-vs-lindblad",
        "stabilizer-crosscheck",
        "conditioning-audit",
    ] {
        assert!(text.contains(kind), "missing {kind} in:\n{text}");
    }
}

#[test]
fn validate_accepts_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ok.json",
        r#"{"experiment": "conditioning-audit", "rng_seed": 3,
            "params": {"epsilon": 0.1, "q": 10, "trials": 50}}"#,
    );
    let out = nhsim(&["validate", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_rejects_misspelled_key_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "typo.json",
        r#"{"experiment": "conditioning-audit", "params": {"epsilonn": 0.1}}"#,
    );
    let out = nhsim(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("epsilonn"), "error does not name the key: {err}");
}

#[test]
fn validate_rejects_non_power_of_two_gadget_dim() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dim.json",
        r#"{"experiment": "gadget-sweep", "params": {"dim": 3}}"#,
    );
    let out = nhsim(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dimension"), "unexpected message: {err}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = nhsim(&["run", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn empty_sweep_writes_empty_table_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "empty.json",
        r#"{"experiment": "gadget-sweep", "params": {"min_deltas": []}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = nhsim(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("gadget_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1, "expected header only: {csv}");
}

#[test]
fn reports_are_byte_identical_for_same_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"experiment": "stabilizer-crosscheck",
            "params": {"num_circuits": 12, "max_qubits": 5}}"#,
    );
    let mut blobs = Vec::new();
    for pass in 0..2 {
        let out_dir = dir.path().join(format!("out{pass}"));
        let out = nhsim(&[
            "run",
            "--config",
            &cfg,
            "--seed",
            "42",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        blobs.push((
            std::fs::read(out_dir.join("report.json")).unwrap(),
            std::fs::read(out_dir.join("stabilizer_crosscheck.csv")).unwrap(),
        ));
    }
    assert_eq!(blobs[0], blobs[1]);
}

#[test]
fn seed_flag_changes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"experiment": "stabilizer-crosscheck",
            "params": {"num_circuits": 12, "max_qubits": 5}}"#,
    );
    let mut reports = Vec::new();
    for seed in ["1", "2"] {
        let out_dir = dir.path().join(format!("out{seed}"));
        let out = nhsim(&[
            "run", "--config", &cfg, "--seed", seed, "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        reports.push(std::fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_ne!(reports[0], reports[1]);
}

#[test]
fn run_gadget_sweep_emits_report_tables_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"experiment": "gadget-sweep", "rng_seed": 7,
            "params": {"dim": 2, "min_deltas": [0.1, 0.3, 0.5]}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = nhsim(&[
        "run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--plots",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert!(report["config_hash"].as_str().unwrap().len() == 64);
    assert_eq!(report["config"]["rng_seed"], serde_json::json!(7));
    let csv = std::fs::read_to_string(out_dir.join("gadget_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4); // header + 3 sweep points
    let svg = std::fs::read_to_string(out_dir.join("failure_vs_r.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn run_trotter_order_reports_slopes_in_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", r#"{"experiment": "trotter-order"}"#);
    let out_dir = dir.path().join("out");
    let out = nhsim(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let generic = report["metrics"]["generic_slope"].as_f64().unwrap();
    let restricted = report["metrics"]["restricted_slope"].as_f64().unwrap();
    assert!((1.35..=1.65).contains(&generic));
    assert!((1.85..=2.15).contains(&restricted));
}

#[test]
fn acceptance_failure_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    // An impossible slope window forces a clean acceptance failure.
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"experiment": "trotter-order",
            "params": {"generic_window": [9.0, 9.5]}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = nhsim(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    // The report is still written, marked failed.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(false));
}

#[test]
fn numerical_failure_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    // Deltas so small the convergence error sits at the numerical floor,
    // which the order fit refuses to interpret.
    let cfg = write_config(
        dir.path(),
        "floor.json",
        r#"{"experiment": "trotter-order",
            "params": {"deltas": [1e-7, 3e-8, 1e-8, 3e-9, 1e-9]}}"#,
    );
    let out = nhsim(&["run", "--config", &cfg, "--out",
        dir.path().join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_conditioning_audit_and_crosscheck_pass() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        (
            "audit.json",
            r#"{"experiment": "conditioning-audit",
                "params": {"trials": 2000}}"#,
        ),
        (
            "traj.json",
            r#"{"experiment": "trajectory-vs-lindblad",
                "params": {"num_trajectories": 400, "steps": 200, "delta": 5e-3}}"#,
        ),
        (
            "dist.json",
            r#"{"experiment": "distance-check",
                "params": {"num_matrices": 4, "dim": 3, "grid_points": 300}}"#,
        ),
        (
            "dil.json",
            r#"{"experiment": "dilation-equivalence",
                "params": {"num_programs": 6, "num_qubits": 3}}"#,
        ),
    ] {
        let cfg = write_config(dir.path(), name, body);
        let out_dir = dir.path().join(format!("{name}.out"));
        let out = nhsim(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
