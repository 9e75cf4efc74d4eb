use std::path::Path;
use std::process::{Command, Output};

use edge_slicing::evalcli::CSV_COLUMNS;
use edge_slicing::SlicingSolution;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edge-slicing"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path, seed: &str) -> String {
    let path = dir.join(format!("s{seed}.json"));
    let p = path.to_str().unwrap().to_string();
    let out = cli(&[
        "generate",
        "--clusters",
        "2",
        "--nodes-per-cluster",
        "3",
        "--requests",
        "6",
        "--seed",
        seed,
        "--out",
        &p,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(generate(dir.path(), "7")).unwrap();
    let b = cli(&["generate", "--clusters", "2", "--nodes-per-cluster", "3", "--requests", "6", "--seed", "7"]);
    assert_eq!(a, b.stdout);
}

#[test]
fn solve_prints_solution_json() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate(dir.path(), "7");
    for solver in ["oesp", "vesp", "dcesp"] {
        let out = cli(&["solve", "--scenario", &s, "--solver", solver, "--seed", "7"]);
        assert_eq!(out.status.code(), Some(0), "{solver}: {}", String::from_utf8_lossy(&out.stderr));
        let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(json["objective"].is_number(), "{solver}");
        let _: SlicingSolution = serde_json::from_slice(&out.stdout).unwrap();
    }
}

#[test]
fn validate_accepts_solver_output_and_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate(dir.path(), "3");
    let sol_path = dir.path().join("sol.json");
    let sol = sol_path.to_str().unwrap();
    let out = cli(&["solve", "--scenario", &s, "--solver", "oesp", "--out", sol]);
    assert_eq!(out.status.code(), Some(0));
    let out = cli(&["validate", "--scenario", &s, "--solution", sol]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("feasible"));

    let mut solution: SlicingSolution = serde_json::from_str(&std::fs::read_to_string(sol).unwrap()).unwrap();
    assert!(!solution.allocation.is_empty(), "seed must admit something");
    for amount in solution.allocation.values_mut() {
        *amount *= 10.0;
    }
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&solution).unwrap()).unwrap();
    let out = cli(&["validate", "--scenario", &s, "--solution", tampered.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("violation node") && text.contains("type"), "{text}");
    assert!(text.trim_end().ends_with("infeasible"));
}

#[test]
fn baseline_solution_exits_two_when_it_overbooks() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    std::fs::copy(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/minimal.json"), &p).unwrap();
    // Blind to coupling, both requests fit: 40 RB and 5 GIPS.
    let out = cli(&["solve", "--scenario", p.to_str().unwrap(), "--solver", "baseline"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("type C"));
}

#[test]
fn experiment_writes_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "study = \"epsilon_sweep\"\nsolvers = [\"oesp\", \"vesp\"]\nclusters = 2\nnodes = [4]\nrequests = [3]\nepsilon = [0.0, 0.9]\n",
    )
    .unwrap();
    let out = cli(&["experiment", "--config", cfg.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.count(), 3);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cli(&[]).status.code(), Some(1));
    assert_eq!(cli(&["solve", "--solver", "simplex"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "study = \"profit\"\nnodes = [7]\nrequests = [1]\n").unwrap();
    let out = cli(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("multiple of K"));
}
