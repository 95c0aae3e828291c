use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unfold")).args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn golden_trace(dir: &Path, steps: usize) -> PathBuf {
    let t = dir.join("golden.trace");
    let o = run(&["induce", fixture("golden.json").to_str().unwrap(), "--steps", &steps.to_string(), "--trace", t.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    t
}

#[test]
fn validate_golden() {
    let o = run(&["validate", fixture("golden.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["valid"], true);
    assert_eq!(v["rank"], 2);
    assert_eq!(v["reduced"]["passes"], true);
    assert_eq!(v["surface_type"], true);
    assert!(v["periodic_leaf"].is_null());
}

#[test]
fn validate_rejects_broken_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("golden.json")).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text.replacen("\"3/2 - 1/2*sqrt(5)\"", "\"1/3\"", 1)).unwrap();
    let o = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not an isometry"));

    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"format":1,"field":{"kind":"rational"},"components":[{"vertices":1}],"isometries":[]}"#).unwrap();
    assert_eq!(run(&["validate", empty.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["validate", dir.path().join("missing.json").to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn induce_golden_fifty_splits() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("g.trace");
    let o = run(&["induce", fixture("golden.json").to_str().unwrap(), "--steps", "50", "--policy", "rips-first", "--trace", t.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["steps"], 50);
    assert_eq!(v["splits"], 50);
    assert_eq!(v["stop"]["reason"], "budget");
    assert!(t.exists());
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn induce_refuses_non_reduced_without_force() {
    let toy = fixture("toy.json");
    let o = run(&["induce", toy.to_str().unwrap(), "--steps", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not reduced"));
    let o = run(&["induce", toy.to_str().unwrap(), "--steps", "3", "--force"]);
    let v = json(&o);
    assert_eq!(v["rips"], 1);
    assert_eq!(v["stop"]["reason"], "no-splitting-partition");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_ue_window_ten() {
    let dir = tempfile::tempdir().unwrap();
    let t = golden_trace(dir.path(), 50);
    let o = run(&["check-ue", t.to_str().unwrap(), "--window", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verdict"], "holds-on-window");
    assert!(!v["witnesses"].as_array().unwrap().is_empty());
    assert_eq!(v["cone"]["ergodic_bound_3n_minus_6"], 0);
    assert_eq!(run(&["check-ue", t.to_str().unwrap(), "--window", "50"]).status.code(), Some(1));
}

#[test]
fn currents_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let t = golden_trace(dir.path(), 50);
    let o = run(&["currents", t.to_str().unwrap(), "--word", "aba", "--at", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let lo = v["envelope"]["lower_f64"].as_f64().unwrap();
    let hi = v["envelope"]["upper_f64"].as_f64().unwrap();
    assert!(0.0 <= lo && lo <= hi);
    assert_eq!(v["word"], "aba");

    let o = run(&["currents", t.to_str().unwrap(), "--word", "a", "--at", "40"]);
    let v = json(&o);
    assert_eq!(v["envelope"]["lower"], v["envelope"]["upper"]);

    assert_eq!(run(&["currents", t.to_str().unwrap(), "--word", "xyz", "--at", "4"]).status.code(), Some(1));
    assert_eq!(run(&["currents", t.to_str().unwrap(), "--word", "a", "--at", "50"]).status.code(), Some(1));
}

#[test]
fn currents_seeded_walk_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let t = golden_trace(dir.path(), 12);
    let args = ["currents", t.to_str().unwrap(), "--word", "ab", "--at", "5", "--empirical", "2000", "--seed", "9"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn export_dot_steps() {
    let dir = tempfile::tempdir().unwrap();
    let t = golden_trace(dir.path(), 3);
    let o = run(&["export-dot", t.to_str().unwrap(), "--step", "0"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("digraph"));
    assert_eq!(text.matches("v0 -> v0").count(), 2);
    let text = String::from_utf8(run(&["export-dot", t.to_str().unwrap(), "--step", "1"]).stdout).unwrap();
    assert_eq!(text.matches("diam ").count(), 2);
    assert_eq!(text.matches(" -> ").count(), 3);
    assert_eq!(run(&["export-dot", t.to_str().unwrap(), "--step", "9"]).status.code(), Some(1));
}

#[test]
fn induce_is_deterministic_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let a = golden_trace(dir.path(), 20);
    let first = std::fs::read(&a).unwrap();
    let b = golden_trace(dir.path(), 20);
    assert_eq!(first, std::fs::read(&b).unwrap());

    let o = run(&["replay", a.to_str().unwrap(), "--rerun"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["diagnostics_identical"], true);
    assert_eq!(v["rerun_identical"], true);
}

#[test]
fn replay_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let t = golden_trace(dir.path(), 5);
    let mut v: Value = serde_json::from_slice(&std::fs::read(&t).unwrap()).unwrap();

    let mut diag = v.clone();
    diag["diagnostics"][3]["generalized_edges"] = 99.into();
    let p = dir.path().join("diag.trace");
    std::fs::write(&p, diag.to_string()).unwrap();
    assert_eq!(run(&["replay", p.to_str().unwrap()]).status.code(), Some(2));

    v["steps"][2]["matrix"][0][0] = "5".into();
    let p = dir.path().join("matrix.trace");
    std::fs::write(&p, v.to_string()).unwrap();
    let o = run(&["replay", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 2"));
}

#[test]
#[ignore = "error term exceeds 1e-4 for words of length at least 2"]
fn strict_currents_gap_example() {
    let dir = tempfile::tempdir().unwrap();
    let t = golden_trace(dir.path(), 50);
    let v = json(&run(&["currents", t.to_str().unwrap(), "--word", "aba", "--at", "40"]));
    let gap = v["envelope"]["gap_f64"].as_f64().unwrap();
    assert!(gap < 1e-4, "gap {gap}");
}
