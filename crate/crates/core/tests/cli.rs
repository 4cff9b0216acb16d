use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart")
}

fn vizgrade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vizgrade"))
        .args(args)
        .env_remove("VIZGRADE_WEBDRIVER_URL")
        .env_remove("VIZGRADE_TIMEOUT_MS")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn grade_snapshot_writes_results() {
    let out = tempfile::tempdir().unwrap();
    let dir = fixtures().join("wrong_color");
    let o = vizgrade(&[
        "grade", "--submission", s(&dir), "--rubric", s(&fixtures().join("rubric.json")),
        "--snapshot", s(&dir), "--out", s(out.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("FAIL bar_color [0/1]"), "{stdout}");
    assert!(stdout.ends_with("Total: 9/10\n"), "{stdout}");
    let results: Value = serde_json::from_slice(&std::fs::read(out.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(results["score"], 9);
    assert!(out.path().join("report.json").is_file());
    assert!(out.path().join("scene.json").is_file());
}

#[test]
fn low_score_still_exits_zero() {
    let dir = fixtures().join("missing_anchor_class");
    let o = vizgrade(&["replay", "--snapshot-seq", s(&dir), "--rubric", s(&fixtures().join("rubric.json"))]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bad_invocation_exits_3() {
    assert_eq!(vizgrade(&["grade"]).status.code(), Some(3));
    assert_eq!(vizgrade(&["frobnicate"]).status.code(), Some(3));
    let dir = fixtures().join("correct");
    let o = vizgrade(&["grade", "--submission", s(&dir), "--rubric", s(&fixtures().join("rubric.json"))]);
    assert_eq!(o.status.code(), Some(3));
    let o = vizgrade(&["replay", "--snapshot-seq", s(&dir), "--rubric", "/nonexistent/rubric.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(vizgrade(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreachable_driver_exits_2() {
    let o = vizgrade(&[
        "grade", "--submission", s(&fixtures().join("submission")), "--rubric", s(&fixtures().join("rubric.json")),
        "--manifest", s(&fixtures().join("manifest.json")), "--webdriver", "http://127.0.0.1:9",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn deconstruct_infers_scales() {
    let o = vizgrade(&[
        "deconstruct", "--snapshot", s(&fixtures().join("correct/00-base.scene.json")), "--anchor", "#bars rect",
        "--dataset", s(&fixtures().join("data.csv")), "--key", "name", "--infer", "value:height", "--infer", "name:x",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["marks"].as_array().unwrap().len(), 6);
    assert_eq!(v["scales"][0]["kind"], "linear");
    assert_eq!(v["scales"][1]["kind"], "band");
    assert_eq!(v["completeness"]["missing"].as_array().unwrap().len(), 0);
}

#[test]
fn history_flags_a_drop() {
    let tmp = tempfile::tempdir().unwrap();
    let hist = tmp.path().join("history.json");
    let rubric = fixtures().join("rubric.json");
    let mut last = String::new();
    for variant in ["correct", "wrong_color"] {
        let dir = fixtures().join(variant);
        let o = vizgrade(&[
            "grade", "--submission", s(&dir), "--rubric", s(&rubric), "--snapshot", s(&dir), "--history", s(&hist),
        ]);
        assert_eq!(o.status.code(), Some(0));
        last = String::from_utf8(o.stdout).unwrap();
    }
    assert!(last.contains("ANOMALY"), "{last}");
}
