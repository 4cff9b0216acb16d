use serde_json::{json, Value};

use super::GradeReport;
use crate::format_number;

/// JSON schema for the platform results file written by
/// [`emit_results_json`].
pub const RESULTS_SCHEMA: &str = include_str!("../../assets/results.schema.json");

/// One line per check in rubric order, then `Total: x/y`.
pub fn render_feedback(report: &GradeReport) -> String {
    let mut out = String::new();
    for r in &report.results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "{status} {} [{}/{}] {}\n",
            r.id,
            format_number(r.points_awarded),
            format_number(r.points_possible),
            r.feedback
        ));
    }
    out.push_str(&format!(
        "Total: {}/{}\n",
        format_number(report.total),
        format_number(report.max)
    ));
    out
}

fn number(n: f64) -> Value {
    if n.is_finite() && n.fract() == 0.0 && n.abs() < 1e15 {
        json!(n as i64)
    } else {
        json!(n)
    }
}

/// The platform results file. Contains no timestamp, so grading the same
/// inputs twice gives identical bytes.
pub fn emit_results_json(report: &GradeReport) -> Vec<u8> {
    let tests: Vec<Value> = report
        .results
        .iter()
        .map(|r| {
            json!({
                "name": r.id,
                "score": number(r.points_awarded),
                "max_score": number(r.points_possible),
                "output": r.feedback,
                "visibility": "visible",
            })
        })
        .collect();
    let score: f64 = report.results.iter().map(|r| r.points_awarded).sum();
    let doc = json!({
        "score": number(score),
        "output": format!("Total: {}/{}", format_number(score), format_number(report.max)),
        "tests": tests,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("results serialize");
    bytes.push(b'\n');
    bytes
}
