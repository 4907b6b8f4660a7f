use decoupled_walk::experiments::ExperimentConfig;
use std::process::{Command, Output};

fn dwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwalk")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn constants_min_a() {
    let o = dwalk(&["constants", "--law", "exp:1", "--case", "min-a"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("0.25"));
    assert!(out.contains("min-a"));
}

#[test]
fn constants_heavy_b_and_json() {
    let o = dwalk(&["constants", "--case", "heavy-b", "--law", "pareto:2.5,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("0.9"));
    let o = dwalk(&["constants", "--law", "weibull:3,1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["case"], "min-b2");
    assert!((v["value"].as_f64().unwrap() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-10);
}

#[test]
fn usage_errors_exit_2() {
    let o = dwalk(&["constants", "--law", "exp:1", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--bogus"));
    let o = dwalk(&["hole", "--law", "cauchy:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--law"));
    let o = dwalk(&["variance", "--law", "exp:1", "--reps", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(dwalk(&[]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    // the one-dimensional CLT needs finite variance
    let o = dwalk(&["flt", "--law", "pareto:1.5,1", "--t", "100", "--reps", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infinite variance"));
}

#[test]
fn validate_is_deterministic_and_detects_corruption() {
    let a = dwalk(&["validate"]);
    let b = dwalk(&["validate"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = dwalk(&["validate", "--corrupt", "rate_light(exp:1)"]);
    assert_eq!(c.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&c.stderr).contains("rate_light(exp:1)"));
}

#[test]
fn outputs_and_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = dwalk(&["variance", "--law", "gamma:2,1", "--t", "30,60", "--reps", "200", "--out", d]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("variance-curve.config.json")).unwrap();
    let cfg = ExperimentConfig::from_json(&text).unwrap();
    assert_eq!(cfg.t, vec![30.0, 60.0]);
    assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("variance-curve.json")).unwrap()).unwrap();
    assert!(report["fingerprint"]["config_hash"].is_string());
    // no temporary files left behind
    let names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().all(|n| !n.starts_with('.')), "{names:?}");

    // rerunning from the written config reproduces the report body
    let cfg_path = dir.path().join("variance-curve.config.json");
    let o2 = dwalk(&["variance", "--config", cfg_path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o2.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("variance-curve.csv")).unwrap();
    assert!(csv.starts_with("t,empirical_var"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn thread_count_does_not_change_reports() {
    let a = dwalk(&["--threads", "1", "flt", "--law", "exp:1", "--t", "100", "--reps", "500"]);
    let b = dwalk(&["--threads", "3", "flt", "--law", "exp:1", "--t", "100", "--reps", "500"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
