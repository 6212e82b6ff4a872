//! Command-line behavior: exit codes, output files, and flag validation.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nodal-shooter"))
}

#[test]
fn classify_prints_report_json() {
    let out = bin()
        .args([
            "classify", "--a", "0.5", "--theta", "0.25", "--dim", "3", "--rmax", "50",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let line = String::from_utf8(out.stdout).unwrap();
    let json: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert_eq!(json["tag"], "OscAroundOne");
    assert_eq!(json["zero_count"], 0);
    assert!(json["rho_a"].is_null());
    assert_eq!(json["final_attractor"], "Plus1");
    assert!(json["lemmas"].as_array().unwrap().len() >= 2);
}

#[test]
fn classify_trivial_zero_short_circuits() {
    let out = bin()
        .args(["classify", "--a", "0", "--theta", "0.25", "--dim", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(out.stdout.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(json["tag"], "TrivialZero");
}

#[test]
fn classify_nodal_case_with_oracle() {
    let out = bin()
        .args([
            "classify", "--a", "6", "--theta", "0.25", "--dim", "3", "--rmax", "20", "--oracle",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let report: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(report["tag"], "NodalFiniteZero");
    assert!((report["rho_a"].as_f64().unwrap() - 5.044516037102).abs() < 1e-6);
    let oracle: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert!(oracle["oracle_max_deviation"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn classify_writes_trajectory_and_event_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let out = bin()
        .args([
            "classify", "--a", "1.5", "--theta", "0.25", "--dim", "3", "--rmax", "30",
        ])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("r,u,v,E\n"));
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("0.0000000000000000e0,1.5000000000000000e0"));
    let events = std::fs::read_to_string(dir.path().join("run.events.csv")).unwrap();
    assert!(events.starts_with("kind,r,u,v\n"));
    assert!(events.contains("ZeroOfV"));
    // byte-identical on a repeated run
    let again = bin()
        .args([
            "classify", "--a", "1.5", "--theta", "0.25", "--dim", "3", "--rmax", "30",
        ])
        .output()
        .unwrap();
    let first = bin()
        .args([
            "classify", "--a", "1.5", "--theta", "0.25", "--dim", "3", "--rmax", "30",
        ])
        .output()
        .unwrap();
    assert_eq!(again.stdout, first.stdout);
}

#[test]
fn usage_errors_exit_one() {
    let out = bin()
        .args(["classify", "--theta", "0.25", "--dim", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["classify", "--a", "0.5", "--theta", "0.7", "--dim", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let out = bin()
        .args(["picard-check", "--a", "0", "--theta", "0.25", "--dim", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_covers_special_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "sweep",
            "--a-from",
            "-1",
            "--a-to",
            "1",
            "--a-steps",
            "3",
            "--theta",
            "0.25",
            "--dim",
            "3",
            "--rmax",
            "20",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "a,tag,zero_count,rho_a,final_attractor,E_end");
    assert!(lines[1].contains("EquilibriumMinus"));
    assert!(lines[2].contains("TrivialZero"));
    assert!(lines[3].contains("EquilibriumPlus"));
    // rho_a column empty for all three
    for line in &lines[1..] {
        assert_eq!(line.split(',').nth(3), Some(""));
    }
    let dat = std::fs::read_to_string(dir.path().join("zeros.dat")).unwrap();
    assert_eq!(dat.lines().count(), 3);
    assert!(dat.lines().all(|l| l.ends_with(" 0")));
}

#[test]
fn shoot_reports_bracket_error_and_roots() {
    let out = bin()
        .args([
            "shoot", "--R", "0.5", "--zeros", "0", "--a-min", "1.05", "--a-max", "1.76", "--theta",
            "0.25", "--dim", "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin()
        .args([
            "shoot",
            "--R",
            "5.336306803878",
            "--zeros",
            "0",
            "--a-min",
            "5.3",
            "--a-max",
            "5.7",
            "--theta",
            "0.25",
            "--dim",
            "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let roots: Vec<f64> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(roots.len(), 1);
    assert!((roots[0] - 5.5).abs() < 1e-6);
}

#[test]
fn picard_check_reports_and_exits_zero() {
    let out = bin()
        .args([
            "picard-check",
            "--a",
            "0.5",
            "--theta",
            "0.25",
            "--dim",
            "3",
            "--delta",
            "0.3",
            "--n",
            "4096",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["sup_diff"].as_f64().unwrap() <= 1e-6);
    assert_eq!(json["delta"].as_f64().unwrap(), 0.3);
    // equilibrium: one sweep, machine-level agreement
    let out = bin()
        .args(["picard-check", "--a", "1", "--theta", "0.25", "--dim", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["sweeps"], 1);
    assert!(json["sup_diff"].as_f64().unwrap() <= 1e-14);
}
