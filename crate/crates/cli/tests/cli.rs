use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heavytail"))
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

const STEP: &str = r#"{"initial":0,"jumps":[[0.5,1]]}"#;

#[test]
fn rate_of_three_jumps() {
    let path = r#"{"initial":0,"jumps":[[0.2,1],[0.5,2],[0.7,0.5]]}"#;
    let o = with_stdin(&["rate"], path);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["I_J1"], 3.0);
    assert_eq!(v["I_M1p"], 3.0);
    assert_eq!(v["I_rw"], 3.0);
}

#[test]
fn j1_distance_of_shifted_jump() {
    let other = r#"{"initial":0,"jumps":[[0.6,1]]}"#;
    let o = with_stdin(&["distance", "--metric", "j1"], &format!("[{STEP},{other}]"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = stdout_json(&o)["distance"].as_f64().unwrap();
    assert!((d - 0.1).abs() < 1e-9, "{d}");
}

#[test]
fn m1p_bounds_bracket() {
    let o = with_stdin(&["distance", "--metric", "m1p"], &format!("[{STEP},{STEP}]"));
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert!(v["lower"].as_f64().unwrap() <= v["upper"].as_f64().unwrap());
    assert!(v["upper"].as_f64().unwrap() < 1e-9);
}

#[test]
fn simulate_prints_one_line_per_trial() {
    let o = bin().args(["simulate", "--n", "50", "--k", "2", "--trials", "2", "--seed", "3"]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for l in lines {
        let v: Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["n"], 50);
        assert_eq!(v["k"], 2);
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bin().arg("no-such-command").output().unwrap().status.code(), Some(2));
    let o = with_stdin(&["rate"], "not json");
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["estimate", "--event", "{}", "--n", "10"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_estimate_matches_rate() {
    let ev = r#"{"name":"big","kind":"kth_jump_at_least","k":1,"x":0.5}"#;
    let o = bin().args(["estimate", "--event", ev, "--n", "100", "--method", "exact"]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let p = v["p_hat"].as_f64().unwrap();
    assert!(p > 0.0 && p < 1.0);
}

#[test]
fn empty_experiment_list_writes_manifest_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiments": []}"#);
    let out = dir.path().join("out");
    let o = bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let entries: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, vec![std::ffi::OsString::from("manifest.json")]);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["experiments"].as_array().unwrap().len(), 0);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

const SMALL_RUN: &str = r#"{
  "experiments": [
    {"name": "paths", "kind": "simulate", "seed": 11, "budget": {"trials": 3},
     "params": {"n": 40, "k": 2, "resolution": 16}},
    {"name": "est", "kind": "estimate", "seed": 12, "n_grid": [20, 40], "budget": {"trials": 1000},
     "params": {"event": {"name": "big", "kind": "kth_jump_at_least", "k": 1, "x": 0.5}}},
    {"name": "slope", "kind": "ldp_slope", "seed": 13, "n_grid": [20, 100, 1000],
     "params": {"event": {"name": "two", "kind": "kth_jump_at_least", "k": 2, "x": 0.5}, "method": "exact"}}
  ]
}"#;

fn run_into(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg("--config").arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_RUN);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_into(&cfg, out, &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for rel in ["paths/paths.jsonl", "est/estimates.csv", "slope/log_ratios.csv"] {
        let x = std::fs::read(a.join(rel)).unwrap();
        let y = std::fs::read(b.join(rel)).unwrap();
        assert!(!x.is_empty(), "{rel} empty");
        assert_eq!(x, y, "{rel} differs between runs");
    }
}

#[test]
fn seed_override_is_recorded_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_RUN);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(run_into(&cfg, out, &["--seed-override", "77"]).status.success());
    }
    let m: Value = serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed_override"], 77);
    let seed = m["seed_registry"]["paths"].as_u64().unwrap();
    assert_ne!(seed, 11);
    assert_eq!(std::fs::read(a.join("paths/paths.jsonl")).unwrap(), std::fs::read(b.join("paths/paths.jsonl")).unwrap());
}

#[test]
fn manifest_lists_artifacts_and_report_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_RUN);
    let out = dir.path().join("out");
    assert!(run_into(&cfg, &out, &[]).status.success());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let exps = m["experiments"].as_array().unwrap();
    assert_eq!(exps.len(), 3);
    for e in exps {
        assert_eq!(e["status"], "ok");
        for a in e["artifacts"].as_array().unwrap() {
            assert!(out.join(a.as_str().unwrap()).is_file());
        }
    }
    let o = bin().arg("report").arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("slope"));
}

#[test]
fn verify_limits_writes_nine_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["verify-limits", "--n-grid", "100,10000"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for i in 1..=9 {
        let text = std::fs::read_to_string(dir.path().join(format!("limit{i}.csv"))).unwrap();
        assert!(text.starts_with("n,value,target"), "limit{i}: {text}");
        assert_eq!(text.lines().count(), 3);
    }
}

#[test]
fn invalid_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = "{\n  \"experiments\": [\n    {\"name\": \"ok\", \"kind\": \"lemma31\", \"seed\": 1, \"n_grid\": [13]},\n    {\"name\": \"bad\", \"kind\": \"simulate\", \"seed\": 2,\n     \"params\": {\"n\": 10}}\n  ]\n}\n";
    let cfg = write_config(dir.path(), text);
    let o = run_into(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
    assert!(!dir.path().join("out").exists());

    let cfg = write_config(dir.path(), "{\n  \"tail\": {\n");
    let o = run_into(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("line"));
}
