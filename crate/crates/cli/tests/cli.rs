use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dnlslab(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dnlslab"));
    c.args(args).env_remove("DNLSLAB_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    dnlslab(args).output().expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const SMALL: [&str; 10] = ["--nx", "256", "--length", "40", "--dt", "1e-3", "--T", "0.02", "--store-every", "5"];

#[test]
fn unitary_strichartz_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["estimates", "--which", "strichartz", "--theta", "0", "--T", "0.5", "--family", "gaussian:20", "--seed", "7", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path());
    assert_eq!(s["schema"], 1);
    assert_eq!(s["status"], "pass");
    assert_eq!(s["config"]["estimates"]["seed"], 7);
    let max = s["results"]["max_ratio"].as_f64().unwrap();
    assert!((max - 1.0).abs() < 1e-10, "{max}");
    let csv = fs::read_to_string(dir.path().join("strichartz_theta0.csv")).unwrap();
    assert!(csv.starts_with("member_id,params,lhs,rhs,ratio\n"));
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn linear_simulation_records_propagator_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["simulate", "--k", "5", "--lambda", "0", "--ic", "gaussian:amp=0.5,width=2", "--out", out];
    args.extend(SMALL);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(dir.path());
    assert!(s["results"]["linear_flow_error"].as_f64().unwrap() <= 1e-10);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x,re,im\n"));
    assert_eq!(traj.lines().count(), 1 + 5 * 256);
}

#[test]
fn gauge_check_with_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "gauge-check", "--N", "4", "--k", "5", "--lambda", "1", "--refine", "--nx", "512", "--length", "50", "--dt",
        "5e-4", "--T", "0.05", "--store-every", "4", "--ic", "modulated:amp=0.6,width=1.5,carrier=3", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let s = summary(dir.path());
    assert!(s["results"]["residual_reduction"].as_f64().unwrap() >= 6.0);
    assert_eq!(s["results"]["rungs"].as_array().unwrap().len(), 2);
}

#[test]
fn failing_gate_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "simulate", "--ic", "gaussian:amp=3,width=0.3", "--T", "0.02", "--dt", "1e-3", "--nx", "256", "--length", "20",
        "--format", "none", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(summary(dir.path())["status"], "fail");
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn invalid_configurations_exit_with_two_and_still_summarize() {
    for args in [
        vec!["estimates", "--family", "gaussian:5"],
        vec!["estimates", "--which", "no_such_estimate"],
        vec!["estimates", "--which", "strichartz", "--T", "1.5"],
        vec!["estimates", "--which", "data_gauge", "--k", "4.5"],
        vec!["simulate", "--k", "4.5"],
        vec!["simulate", "--ic", "triangle:amp=1"],
        vec!["gauge-check", "--N", "3"],
    ] {
        let dir = tempfile::tempdir().unwrap();
        let mut a = args.clone();
        a.extend(["--out", dir.path().to_str().unwrap()]);
        let o = run(&a);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let s = summary(dir.path());
        assert_eq!(s["status"], "config_invalid", "{args:?}");
        assert!(s["error"].is_string());
    }
}

#[test]
fn unwritable_output_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let target = blocker.join("out");
    let o = run(&["decompose", "--T", "0.01", "--out", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn environment_and_flag_choose_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("env");
    let flag_dir = dir.path().join("flag");
    let mut args = vec!["decompose"];
    args.extend(SMALL);
    let o = dnlslab(&args).env("DNLSLAB_OUT", &env_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("block_energies.csv").exists());

    args.extend(["--out", flag_dir.to_str().unwrap()]);
    let o = dnlslab(&args).env("DNLSLAB_OUT", &env_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("summary.json").exists());
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"grid": {"nx": 128, "length": 30, "dt": 1e-3, "T": 0.01, "store_every": 2},
            "physics": {"lambda": 0.5, "k": 6},
            "data": {"ic": "modulated:amp=0.4,width=1.5,carrier=2"}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&["norms", "--config", cfg.to_str().unwrap(), "--nx", "256", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["config"]["grid"]["nx"], 256);
    assert_eq!(s["config"]["grid"]["length"], 30.0);
    assert_eq!(s["config"]["physics"]["k"], 6.0);
    let norms = fs::read_to_string(out.join("norms.csv")).unwrap();
    assert!(norms.starts_with("quantity,band,sup_sobolev,smoothing,maximal_l2,maximal_l4,total\n"));
    assert!(norms.contains("\ny_t_gauged,"));

    fs::write(&cfg, r#"{"grid": {"points": 3}}"#).unwrap();
    let o = run(&["norms", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["estimates", "--which", "double_smoothing", "--family", "random_band:20", "--seed", "3", "--nx", "256", "--length", "40", "--dt", "0.01", "--out", out];
    let snapshot = || {
        assert_eq!(run(&args).status.code(), Some(0));
        let mut files: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.into_iter().map(|p| (p.clone(), fs::read(p).unwrap())).collect::<Vec<_>>()
    };
    let first = snapshot();
    assert_eq!(first.len(), 2);
    assert_eq!(first, snapshot());
}
