//! End-to-end grading, feedback text, platform results files and score
//! history anomaly flags.

mod history;
mod output;
mod pipeline;

pub use history::{flag_anomalies, AnomalyFlag, HistoryEntry, ScoreHistory};
pub use output::{emit_results_json, render_feedback, RESULTS_SCHEMA};
pub use pipeline::{grade, grade_scenes, load_snapshot_sequence, GradeConfig, GradeMode, SnapshotSequence};

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rubric::{CheckResult, RubricError};
use crate::scene::Viewport;

#[derive(Debug, Error)]
pub enum ReportError {
    /// The grading machine itself is broken: no driver, no port, no
    /// session. Never caused by the submission.
    #[error("fatal environment error: {0}")]
    FatalEnvironment(String),
    #[error(transparent)]
    Rubric(#[from] RubricError),
    #[error("cannot read snapshot input: {0}")]
    Snapshot(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Screenshot,
    SceneSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: ArtifactKind,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentInfo {
    pub tool_version: String,
    pub viewport: Option<Viewport>,
    /// `snapshot`, or the WebDriver endpoint and browser.
    pub driver: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeReport {
    pub submission_id: String,
    pub timestamp: DateTime<Utc>,
    pub results: Vec<CheckResult>,
    pub total: f64,
    pub max: f64,
    pub artifacts: Vec<Artifact>,
    pub environment: EnvironmentInfo,
}

impl GradeReport {
    /// Builds a report whose total is the sum of awarded points.
    pub fn new(
        submission_id: impl Into<String>,
        timestamp: DateTime<Utc>,
        results: Vec<CheckResult>,
        max: f64,
        environment: EnvironmentInfo,
    ) -> Self {
        let total = results.iter().map(|r| r.points_awarded).sum();
        GradeReport {
            submission_id: submission_id.into(),
            timestamp,
            results,
            total,
            max,
            artifacts: Vec::new(),
            environment,
        }
    }
}
