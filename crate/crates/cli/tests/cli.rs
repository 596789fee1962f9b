use std::path::Path;
use std::process::{Command, Output};

const CANONICAL: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/canonical.toml");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doublewell"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn canonical_text() -> String {
    std::fs::read_to_string(CANONICAL).unwrap()
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.toml");
    let out = run(&["slope", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nowhere.toml"), "{stderr}");
}

#[test]
fn missing_flag_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["slope"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &canonical_text().replace("[time]", "[time]\ndt = 0.1"));
    let out = run(&["evolve", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}

#[test]
fn evolve_writes_the_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["evolve", "--quiet", "--config", CANONICAL], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,J,trace_dev,min_eig,leakage"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert_eq!(first[1], 0.0);
    assert_eq!(csv.lines().count(), 12);
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("1.0000000000000000e0,"), "{last}");

    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(json["command"], "evolve");
    assert_eq!(json["config"]["model"]["T"], 0.01);
    assert!(json["config"].get("output").is_none());
    assert!(json["config_text"].as_str().unwrap().contains("[noise]"));
    assert!(json["build"]["build_id"].is_string());
    assert_eq!(json["result"]["flagged_times"].as_array().unwrap().len(), 0);
}

#[test]
fn slope_reports_both_limits() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["slope", "--quiet", "--config", CANONICAL], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("slope.json")).unwrap()).unwrap();
    let r = &json["result"];
    assert_eq!(r["limit"], "weak");
    assert!(r["pass"].as_bool().unwrap());
    assert!((r["report"]["analytic_large_n"].as_f64().unwrap() - 2e-3).abs() < 1e-15);

    let cfg = write_config(
        dir.path(),
        &canonical_text().replace("kind = \"exponential\"", "kind = \"delta\""),
    );
    let sub = dir.path().join("singular");
    let out = run(&["slope", "--quiet", "--config", &cfg], &sub);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(sub.join("slope.json")).unwrap()).unwrap();
    assert_eq!(json["result"]["limit"], "singular");
    assert!((json["result"]["report"]["numeric"].as_f64().unwrap() - 1e-3).abs() < 1e-15);
}

#[test]
fn run_dispatches_on_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &canonical_text().replace("scenario = \"compare-all\"", "scenario = \"evolve-singular\""),
    );
    let out = run(&["run", "--quiet", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("trajectory.csv").exists());
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn compare_rejects_an_asymmetric_trap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &canonical_text().replace("eps2 = 0.5", "eps2 = 0.7"));
    let out = run(&["compare", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unravel_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let text = canonical_text()
        .replace("trajectories = 10000", "trajectories = 200")
        .replace("dt_check = true", "dt_check = false")
        .replace("t_max = 1.0", "t_max = 0.2")
        .replace("points = 11", "points = 3");
    let cfg = write_config(dir.path(), &text);
    let read = |sub: &str, extra: &[&str]| {
        let out_dir = dir.path().join(sub);
        let mut args = vec!["unravel", "--quiet", "--config", &cfg];
        args.extend_from_slice(extra);
        let out = run(&args, &out_dir);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(out_dir.join("ensemble.csv")).unwrap()
    };
    let a = read("a", &[]);
    let b = read("b", &[]);
    let c = read("c", &["--seed", "99"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.starts_with("t,J,J_stderr,trace_dev,min_eig,leakage\n"));
    assert_eq!(a.lines().count(), 4);
}
