//! Builds a report by hand and prints the platform results file.
//!
//! cargo run --example emit_results

use chrono::Utc;
use vizgrade::report::{emit_results_json, render_feedback, EnvironmentInfo, GradeReport};
use vizgrade::rubric::CheckResult;

fn check(id: &str, passed: bool, points: f64, feedback: &str) -> CheckResult {
    CheckResult {
        id: id.into(),
        passed,
        points_awarded: if passed { points } else { 0.0 },
        points_possible: points,
        observed: String::new(),
        expected: String::new(),
        feedback: feedback.into(),
    }
}

fn main() {
    let results = vec![
        check("bars_exist", true, 2.0, ""),
        check("height_scale", true, 2.5, ""),
        check("bar_color", false, 1.0, "expected fill steelblue, found rgb(255, 0, 0)"),
    ];
    let env = EnvironmentInfo { tool_version: env!("CARGO_PKG_VERSION").into(), viewport: None, driver: "example".into() };
    let report = GradeReport::new("student-42", Utc::now(), results, 5.5, env);
    print!("{}", render_feedback(&report));
    print!("{}", String::from_utf8_lossy(&emit_results_json(&report)));
}
