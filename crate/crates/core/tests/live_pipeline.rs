use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::Value;
use vizgrade::harness::ReadinessPolicy;
use vizgrade::report::{grade, render_feedback, ArtifactKind, GradeConfig};
use vizgrade::wire::mock::{MockConfig, MockWebDriver};
use vizgrade::wire::png_dimensions;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart")
}

fn scene(variant: &str, file: &str) -> Value {
    serde_json::from_slice(&std::fs::read(fixtures().join(variant).join(file)).unwrap()).unwrap()
}

fn live_config(url: &str) -> GradeConfig {
    let mut cfg = GradeConfig::live(url);
    cfg.manifest = Some(fixtures().join("manifest.json"));
    cfg.readiness = Some(ReadinessPolicy {
        poll_interval_ms: 5,
        timeout_ms: 500,
        ..ReadinessPolicy::with_anchors(["#bars rect"])
    });
    cfg
}

#[test]
fn live_grade_through_mock_driver() {
    let mock = MockWebDriver::start(MockConfig {
        scenes: vec![
            scene("correct", "01-hover_tooltip-pre.scene.json"),
            scene("correct", "02-hover_tooltip-post.scene.json"),
        ],
        render_after_polls: 2,
        ..Default::default()
    })
    .unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = live_config(mock.url());
    cfg.out_dir = Some(out.path().to_path_buf());
    let r = grade(&fixtures().join("submission"), &fixtures().join("rubric.json"), &cfg).unwrap();
    assert_eq!((r.total, r.max), (10.0, 10.0), "{}", render_feedback(&r));

    // one hover, released afterwards
    assert_eq!(mock.performed_actions().len(), 1);
    let url = mock.current_url().unwrap();
    assert!(url.starts_with("http://127.0.0.1:") && url.ends_with("/index.html"), "{url}");
    assert!(mock.live_sessions().is_empty(), "session not deleted");

    let shot = r.artifacts.iter().find(|a| a.kind == ArtifactKind::Screenshot).unwrap();
    let png = std::fs::read(&shot.path).unwrap();
    assert_eq!(png_dimensions(&png).unwrap(), (1024, 768));
    assert!(r.artifacts.iter().any(|a| a.kind == ArtifactKind::SceneSnapshot && a.path.is_file()));
}

#[test]
fn live_grade_detects_missing_tooltip() {
    let pre = scene("tooltip_never_shown", "01-hover_tooltip-pre.scene.json");
    let mock = MockWebDriver::start(MockConfig {
        scenes: vec![pre.clone(), pre],
        ..Default::default()
    })
    .unwrap();
    let r = grade(&fixtures().join("submission"), &fixtures().join("rubric.json"), &live_config(mock.url())).unwrap();
    let failed: Vec<_> = r.results.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect();
    assert_eq!(failed, vec!["tooltip"]);
}

#[test]
fn missing_files_degrade_to_failed_checks() {
    let mock = MockWebDriver::start(MockConfig::default()).unwrap();
    let empty = tempfile::tempdir().unwrap();
    let r = grade(empty.path(), &fixtures().join("rubric.json"), &live_config(mock.url())).unwrap();
    assert_eq!(r.total, 0.0);
    assert!(r.results.iter().all(|c| c.feedback.contains("index.html")), "{}", render_feedback(&r));
}

#[test]
fn slow_page_is_a_submission_failure() {
    let mock = MockWebDriver::start(MockConfig {
        navigation_delay: Duration::from_millis(50),
        page_load_timeout: Duration::from_millis(10),
        ..Default::default()
    })
    .unwrap();
    let r = grade(&fixtures().join("submission"), &fixtures().join("rubric.json"), &live_config(mock.url())).unwrap();
    assert_eq!(r.total, 0.0);
    assert!(r.results[0].feedback.contains("failed to load"), "{}", r.results[0].feedback);
}
