use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bftl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bftl"))
        .args(args)
        .env_remove("BFTL_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

const TWO_CONSTANT: &str = r#"{
  "params": {"alpha": 0.5, "beta": 20.0, "length": 4.5, "v_max": 30.0, "v_min": 3.0,
             "shape": {"kind": "tanh", "c": 1.0, "d_s": 2.5}},
  "leader": {"kind": "constant", "velocity": 15.0},
  "initial": {"headways": [10.0], "velocities": [5.0]},
  "t_end": 5.0
}"#;

#[test]
fn reproduce_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = bftl(&["reproduce", "fig-lower", "--out", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(dir.path().join("trajectory.csv").exists());
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert!((cert["h_min"][0].as_f64().unwrap() - 0.730849).abs() < 1e-5);

    let five = tempfile::tempdir().unwrap();
    let run = bftl(&[
        "reproduce",
        "fig-five",
        "--out",
        five.path().to_str().unwrap(),
        "--strict",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let header = fs::read_to_string(five.path().join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,x1,v1,x2,v2,h2,x3,"));
}

#[test]
fn negative_headway_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = TWO_CONSTANT.replace("[10.0]", "[-1.0]");
    let cfg = write_config(dir.path(), "bad.json", &bad);
    let out = dir.path().join("out");
    let run = bftl(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().count() == 0);
}

#[test]
fn simulate_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "two.json", TWO_CONSTANT);
    let out = dir.path().join("out");
    let run = bftl(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--t-end",
        "2",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for name in [
        "trajectory.csv",
        "energies.csv",
        "phase.csv",
        "certificate.json",
        "stability.json",
        "transitions.json",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let rows = fs::read_to_string(out.join("trajectory.csv")).unwrap().lines().count();
    assert_eq!(rows, 2002);

    let run = bftl(&["bounds", "--config", &cfg]);
    assert!(run.status.success());
    let cert: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(cert["mode"], "theorem_consistent");
    assert_eq!(cert["params_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn stability_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "two.json", TWO_CONSTANT);
    let run = bftl(&[
        "stability",
        "--config",
        &cfg,
        "--vstar",
        "15",
        "--interval",
        "0.05",
        "20",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(report["locally_stable"], true);
    assert!((report["eigenvalues"][0]["re"].as_f64().unwrap() + 1.85).abs() < 1e-3);
    assert_eq!(report["beta_verdict"]["status"], "violated");
}

#[test]
fn sweep_prints_and_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "two.json", TWO_CONSTANT);
    let grid = write_config(
        dir.path(),
        "grid.json",
        r#"{"alpha": [0.5, 1.0], "beta": [20.0, 120.0]}"#,
    );
    let out = dir.path().join("sweep");
    let run = bftl(&[
        "sweep",
        "--config",
        &cfg,
        "--grid",
        &grid,
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 5);
    assert!(stdout.starts_with("index,alpha,beta,"));
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap(), stdout);
}

#[test]
fn strict_mode_flags_violated_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // the reference beta = 20 sits below max V'(h) h^2 on the observed range
    let run = bftl(&["reproduce", "fig-two-constant", "--out", out, "--strict"]);
    assert_eq!(run.status.code(), Some(4), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stderr).contains("beta assumption violated"));
    let run = bftl(&["reproduce", "fig-two-constant", "--out", out]);
    assert!(run.status.success());
}

#[test]
fn unknown_preset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let run = bftl(&["reproduce", "fig-nope", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}
