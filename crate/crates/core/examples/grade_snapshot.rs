//! Grades every recorded fixture against the bar chart rubric and prints
//! the feedback.
//!
//! cargo run --example grade_snapshot

use vizgrade::report::{grade, render_feedback, GradeConfig};

fn main() -> anyhow::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart");
    let rubric = dir.join("rubric.json");
    for variant in ["correct", "wrong_color", "missing_datum", "tooltip_never_shown"] {
        let seq = dir.join(variant);
        let report = grade(&seq, &rubric, &GradeConfig::snapshot(&seq))?;
        println!("== {variant}");
        print!("{}", render_feedback(&report));
    }
    Ok(())
}
