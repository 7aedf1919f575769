use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fwal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwal")).args(args).output().unwrap()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr)
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr)));
    v["error"]["kind"].as_str().unwrap().to_string()
}

const TRACE_HEADER: &str = "t,wall_time_s,lagrangian,fw_gap,feasibility,dual_norm,objective,drop_steps_cum";

#[test]
fn solve_writes_trace_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = fwal(&[
        "solve",
        config("two_l1_balls.json").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let x = report["x"][0].as_array().unwrap();
    assert!((x[0].as_f64().unwrap() - 1.0).abs() < 1e-4);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), TRACE_HEADER);
    assert!(dir.path().join("solution.json").exists());
}

#[test]
fn budget_flag_stops_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    std::fs::write(
        &problem,
        r#"{"objective": {"type": "squared_distance", "target": [3.0, 1.0]},
            "sets": [{"type": "simplex", "dim": 2}, {"type": "l1_ball", "dim": 2, "radius": 0.5}],
            "solver": {"max_outer_iters": 1000000000, "stop_feasibility_tol": 1e-300, "stop_gap_tol": 1e-300}}"#,
    )
    .unwrap();
    let out = fwal(&[
        "--budget-s",
        "0.2",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "solve",
        problem.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["stop"], "time_budget");
}

#[test]
fn cov_exp_writes_both_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = fwal(&[
        "cov-exp",
        config("covariance_small.json").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--budget-s",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["fwal_trace.csv", "gfb_trace.csv"] {
        let trace = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(trace.lines().next().unwrap(), TRACE_HEADER);
        assert!(trace.lines().count() > 1);
    }
    let summary: Value =
        serde_json::from_reader(std::fs::File::open(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["d"], 20);
    assert_eq!(summary["time_budget_s"], 1.0);
    let methods = summary["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 2);
    assert!(methods.iter().all(|m| m["error"].is_null()));
}

#[test]
fn bench_lmo_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = fwal(&[
        "bench-lmo",
        "--dims",
        "8,16",
        "--trials",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bench_lmo.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "dim,lmo_ms,proj_ms");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("8,"));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), csv);
}

#[test]
fn verify_reports_every_check() {
    let out = fwal(&["verify", "--seed", "11"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let checks: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(checks.len(), 6);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn failures_emit_error_json() {
    let out = fwal(&["solve", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "io");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"objective": {"type": "squared_distance", "target": [1.0]}, "sets": [], "bogus": 1}"#,
    )
    .unwrap();
    let out = fwal(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "json");

    std::fs::write(&bad, r#"{"objective": {"type": "squared_distance", "target": [1.0]}, "sets": [{"type": "l1_ball", "dim": 2, "radius": 1.0}, {"type": "simplex", "dim": 2}]}"#)
        .unwrap();
    let out = fwal(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "dimension_mismatch");

    let out = fwal(&["bench-lmo", "--dims", "16,8"]);
    assert_eq!(error_kind(&out), "invalid_argument");
}

#[test]
fn usage_errors_are_json_too() {
    let out = fwal(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "usage");
    let out = fwal(&["--budget-s", "-1", "verify"]);
    assert_eq!(out.status.code(), Some(2));
    let out = fwal(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("cov-exp"));
}
