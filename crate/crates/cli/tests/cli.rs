use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn serialcons(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_serialcons"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn num(v: &Value, path: &[&str]) -> f64 {
    let mut cur = v;
    for key in path {
        cur = &cur[*key];
    }
    cur.as_f64().unwrap_or_else(|| panic!("{path:?} is not a number: {cur}"))
}

#[test]
fn bound_of_reciprocal_pair_is_two() {
    let out = serialcons(&["bound", "--poles", "3,0.3333333333"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((num(&r, &["optimal_condition"]) - 2.0).abs() < 1e-8);
    assert_eq!(r["scaling"].as_array().unwrap().len(), 2);
    assert_eq!(r["s_opt"].as_array().unwrap().len(), 2);
}

#[test]
fn bound_of_single_pole_is_one() {
    let r = report(&serialcons(&["bound", "--poles", "1"]));
    assert_eq!(num(&r, &["optimal_condition"]), 1.0);
    assert_eq!(num(&r, &["raw_condition"]), 1.0);
}

#[test]
fn bound_of_three_poles_matches_search() {
    // Minimum found by an independent Nelder-Mead search over log K.
    let r = report(&serialcons(&["bound", "--poles", "1,2,3"]));
    assert!((num(&r, &["optimal_condition"]) - 65.0).abs() < 1e-9);
    assert!((num(&r, &["raw_condition"]) - 112.0).abs() < 1e-9);
    assert!(r["disturbance_constants"]["alpha_w"].is_number());
}

#[test]
fn invalid_poles_exit_with_two() {
    for poles in ["1,1", "-1", "0,2", "abc"] {
        let out = serialcons(&["bound", "--poles", poles]);
        assert_eq!(out.status.code(), Some(2), "poles {poles}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn velocity_step_settles() {
    let out = serialcons(&["formation", "--scenario", scenario("velocity_step.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["rejected"], Value::Bool(true));
    assert!(num(&r, &["rejection", "epos_final"]) < 1e-6);
    let ratio = num(&r, &["sup_ratios", "formation_error", "ratio"]);
    let bound = num(&r, &["bounds", "initial_condition", "value"]);
    assert!(ratio <= bound);
    assert_eq!(r["initial_condition_check"]["holds"], Value::Bool(true));
}

#[test]
fn pd_controller_keeps_stationary_error() {
    let out = serialcons(&[
        "formation",
        "--scenario",
        scenario("hill.json").to_str().unwrap(),
        "--set",
        "controller=pd",
        "--set",
        "n_agents=8",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["controller"], "pd");
    assert_eq!(r["reduced_poles"], Value::Bool(true));
    assert_eq!(r["rejected"], Value::Bool(false));
    let s = &r["stationary_error"];
    assert!(num(s, &["final_norm"]) >= 0.1);
    assert!(num(s, &["deviation"]) < 1e-4);
}

#[test]
fn pi_controller_rejects_hill_load() {
    let out = serialcons(&[
        "formation",
        "--scenario",
        scenario("hill.json").to_str().unwrap(),
        "--set",
        "n_agents=8",
    ]);
    let r = report(&out);
    assert_eq!(r["rejected"], Value::Bool(true));
    assert_eq!(r["disturbance"]["type"], "hill");
    assert_eq!(r["disturbance_check"]["holds"], Value::Bool(true));
}

#[test]
fn single_agent_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = serialcons(&[
        "formation",
        "--scenario",
        scenario("velocity_step.json").to_str().unwrap(),
        "--set",
        "n_agents=1",
        "--set",
        "T=2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(num(&r, &["sup_ratios", "formation_error", "sup_error"]), 0.0);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,xi_0,xi_1,xi_2,epos_0,evel_0");
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(&cols[1..], &[0.0, 0.0, 10.0, 0.0, 0.0]);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = |dir: &tempfile::TempDir| {
        vec![
            "formation".to_string(),
            "--scenario".into(),
            scenario("hill.json").to_str().unwrap().into(),
            "--set".into(),
            "n_agents=5".into(),
            "--set".into(),
            "T=20".into(),
            "--out".into(),
            dir.path().to_str().unwrap().into(),
        ]
    };
    let run = |dir| {
        let args = args(dir);
        serialcons(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let (oa, ob) = (run(&a), run(&b));
    assert_eq!(oa.stdout, ob.stdout);
    for file in ["trajectory.csv", "positions.csv", "report.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn simulate_is_seeded() {
    let path = scenario("random_consensus.json");
    let path = path.to_str().unwrap();
    let a = serialcons(&["simulate", "--scenario", path, "--seed", "4"]);
    let b = serialcons(&["simulate", "--scenario", path, "--seed", "4"]);
    let c = serialcons(&["simulate", "--scenario", path, "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let r = report(&a);
    assert_eq!(r["transient"]["holds"], Value::Bool(true));
    assert_eq!(r["order"], 4);
}

#[test]
fn sweep_writes_one_directory_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = serialcons(&[
        "sweep",
        "--scenario",
        scenario("velocity_step.json").to_str().unwrap(),
        "--agents",
        "2,5",
        "--set",
        "T=10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let entries = r["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["bound"], entries[1]["bound"]);
    for n in [2, 5] {
        assert!(dir.path().join(format!("n{n}/trajectory.csv")).is_file());
    }
    assert!(dir.path().join("report.json").is_file());
}

#[test]
fn verify_suites_pass() {
    let out = serialcons(&["verify", "lemma2", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["passed"], Value::Bool(true));
    assert!(num(&r, &["worst_margin"]) >= 0.0);

    let r = report(&serialcons(&["verify", "contraction"]));
    assert_eq!(r["violations"], 0);
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"poles": [1, 2, 3], "n_agents": 3, "disturbance": {"type": "wind"}}"#).unwrap();
    let out = serialcons(&["formation", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    let out = serialcons(&["formation", "--scenario", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(serialcons(&["verify", "theorem3"]).status.code(), Some(2));
    assert_eq!(serialcons(&["launch"]).status.code(), Some(2));
}

#[test]
fn divergence_exits_with_three() {
    let out = serialcons(&[
        "formation",
        "--scenario",
        scenario("velocity_step.json").to_str().unwrap(),
        "--set",
        "dt=2",
        "--set",
        "T=200",
    ]);
    assert_eq!(out.status.code(), Some(3));
}
