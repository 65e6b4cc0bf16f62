use std::path::Path;
use std::process::{Command, Output};

use lawcraft_cli::{Manifest, COMPARISON, EXPERIENCE, MANIFEST, POLICY, PREDICATES, RECORDS, REPORT, SUMMARY, TRAIN_LOG};
use serde_json::Value;

fn lawcraft(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lawcraft"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = lawcraft(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn pipeline(out: &Path) {
    ok(out, &["--seed", "3", "collect"]);
    ok(out, &["--seed", "3", "mine"]);
    ok(out, &["--seed", "3", "compile"]);
    ok(out, &["--seed", "3", "train", "--steps", "10000", "--hidden", "16"]);
    ok(out, &["--seed", "3", "eval", "--episodes", "3"]);
}

/// The manifest with wall-clock fields removed.
fn manifest_without_clock(out: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST)).unwrap()).unwrap();
    for run in v["runs"].as_object_mut().unwrap().values_mut() {
        run.as_object_mut().unwrap().remove("wall_clock");
    }
    v
}

#[test]
fn pipeline_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    for name in [RECORDS, EXPERIENCE, PREDICATES, POLICY, TRAIN_LOG, REPORT, SUMMARY] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between identical runs");
    }
    assert_eq!(manifest_without_clock(a.path()), manifest_without_clock(b.path()));
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(a.path().join(MANIFEST)).unwrap()).unwrap();
    let keys: Vec<&str> = manifest.runs.keys().map(String::as_str).collect();
    assert_eq!(keys, ["collect", "compile", "eval", "mine", "train"]);
    assert_eq!(manifest.runs["train"].inputs, [PREDICATES]);
    assert_eq!(manifest.runs["eval"].seeds.len(), 3);
}

#[test]
fn mine_prints_one_line_per_objective() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["collect", "--per-objective-success", "3", "--per-objective-fail", "3"]);
    let text = ok(dir.path(), &["mine"]);
    assert_eq!(text.lines().count(), 22);
    assert!(text.starts_with("1. Collect Wood: Requires facing tree."));
}

#[test]
fn missing_inputs_fail_with_the_expected_path() {
    let dir = tempfile::tempdir().unwrap();
    for (args, file) in [(&["mine"][..], RECORDS), (&["compile"][..], EXPERIENCE), (&["train", "--steps", "10"][..], PREDICATES), (&["eval"][..], POLICY)] {
        let o = lawcraft(dir.path(), args);
        assert!(!o.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("missing input") && err.contains(file), "{args:?}: {err}");
    }
}

#[test]
fn bad_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!lawcraft(dir.path(), &["train", "--reward-preset", "everything"]).status.success());
    assert!(!lawcraft(dir.path(), &["eval", "--agent", "oracle"]).status.success());
    assert!(!lawcraft(dir.path(), &["compare", "--configs", "health_only"]).status.success());
}

#[test]
fn zero_step_training_writes_the_initial_policy() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["collect", "--per-objective-success", "2", "--per-objective-fail", "2"]);
    ok(dir.path(), &["mine"]);
    ok(dir.path(), &["compile"]);
    ok(dir.path(), &["train", "--steps", "0", "--hidden", "4"]);
    let log = std::fs::read_to_string(dir.path().join(TRAIN_LOG)).unwrap();
    assert_eq!(log.lines().count(), 1);
    ok(dir.path(), &["eval", "--episodes", "1"]);
}

#[test]
fn fixed_agents_evaluate_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["eval", "--agent", "noop", "--episodes", "2"]);
    assert!(text.contains("score 0.000"));
    let report = std::fs::read_to_string(dir.path().join(REPORT)).unwrap();
    assert_eq!(report.lines().count(), 23);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(SUMMARY)).unwrap()).unwrap();
    assert_eq!(summary["agent"], "noop");
    ok(dir.path(), &["collect", "--per-objective-success", "2", "--per-objective-fail", "2"]);
    ok(dir.path(), &["mine"]);
    let table = ok(dir.path(), &["compare", "--configs", "random,planner", "--runs", "2", "--episodes", "2", "--jobs", "2"]);
    assert!(table.contains("planner") && table.contains("random"));
    let csv = std::fs::read_to_string(dir.path().join(COMPARISON)).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
