use std::path::{Path, PathBuf};

use chrono::DateTime;
use serde_json::Value;
use vizgrade::report::{emit_results_json, grade, render_feedback, GradeConfig, ReportError};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart")
}

fn grade_fixture(name: &str) -> vizgrade::report::GradeReport {
    let dir = fixtures().join(name);
    let mut cfg = GradeConfig::snapshot(&dir);
    cfg.timestamp = Some(DateTime::UNIX_EPOCH);
    grade(&dir, &fixtures().join("rubric.json"), &cfg).unwrap()
}

fn failed(report: &vizgrade::report::GradeReport) -> Vec<&str> {
    report.results.iter().filter(|r| !r.passed).map(|r| r.id.as_str()).collect()
}

#[test]
fn correct_fixture_gets_full_marks() {
    let r = grade_fixture("correct");
    assert_eq!(failed(&r), Vec::<&str>::new(), "{}", render_feedback(&r));
    assert_eq!((r.total, r.max), (10.0, 10.0));
}

#[test]
fn each_defect_fails_only_its_check() {
    for (fixture, check) in [
        ("missing_anchor_class", "bar_class"),
        ("missing_datum", "all_data_plotted"),
        ("wrong_scale_kind", "height_scale"),
        ("wrong_color", "bar_color"),
        ("tooltip_never_shown", "tooltip"),
    ] {
        let r = grade_fixture(fixture);
        assert_eq!(failed(&r), vec![check], "{fixture}:\n{}", render_feedback(&r));
    }
}

#[test]
fn missing_bar_feedback_names_the_key() {
    let r = grade_fixture("missing_datum");
    let c = r.results.iter().find(|c| c.id == "all_data_plotted").unwrap();
    assert!(c.feedback.contains('F'), "{}", c.feedback);
}

#[test]
fn results_json_sums() {
    let r = grade_fixture("wrong_color");
    let v: Value = serde_json::from_slice(&emit_results_json(&r)).unwrap();
    let sum: f64 = v["tests"].as_array().unwrap().iter().map(|t| t["score"].as_f64().unwrap()).sum();
    assert_eq!(v["score"].as_f64().unwrap(), sum);
    assert_eq!(sum, 9.0);
}

#[test]
fn single_file_snapshot_fails_unrecorded_interaction() {
    let dir = fixtures().join("correct");
    let cfg = GradeConfig::snapshot(dir.join("00-base.scene.json"));
    let r = grade(&dir, &fixtures().join("rubric.json"), &cfg).unwrap();
    assert_eq!(failed(&r), vec!["tooltip"]);
    let t = r.results.iter().find(|c| c.id == "tooltip").unwrap();
    assert!(t.feedback.contains("no recorded scenes"), "{}", t.feedback);
}

#[test]
fn live_mode_without_driver_is_fatal() {
    let sub = tempfile::tempdir().unwrap();
    std::fs::write(sub.path().join("index.html"), "<html><body></body></html>").unwrap();
    let cfg = GradeConfig::live("http://127.0.0.1:9");
    let e = grade(sub.path(), &fixtures().join("rubric.json"), &cfg).unwrap_err();
    assert!(matches!(e, ReportError::FatalEnvironment(_)), "{e}");
}

#[test]
fn artifacts_exist() {
    let dir = fixtures().join("correct");
    let out = tempfile::tempdir().unwrap();
    let mut cfg = GradeConfig::snapshot(&dir);
    cfg.out_dir = Some(out.path().to_path_buf());
    let r = grade(&dir, &fixtures().join("rubric.json"), &cfg).unwrap();
    assert_eq!(r.artifacts.len(), 1);
    assert!(r.artifacts.iter().all(|a| a.path.is_file()));
}
