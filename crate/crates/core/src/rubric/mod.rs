//! Rubrics: loading, parameter resolution, checks and scoring.

mod checks;
mod dataset;
pub mod expr;
mod model;
mod params;

pub use checks::{render_template, run_check, run_checks, CheckContext, CheckResult};
pub use dataset::{load_dataset_file, parse_csv_str};
pub use model::{
    load_rubric, load_rubric_file, Check, CheckSpec, DatasetSource, Expected, ExpectedColor,
    Parameter, ParameterSource, Rubric, Scoring, ScoringMode, TextMatcher, Tolerances,
    SUPPORTED_RUBRIC_VERSIONS,
};
pub use params::{resolve_parameters, resolve_parameters_strict, Environment};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RubricError {
    #[error("rubric schema error: {0}")]
    Schema(String),
    #[error("duplicate check id {0:?}")]
    DuplicateCheckId(String),
    #[error("check points sum to {total} but max_points is {max_points}")]
    PointsMismatch { total: f64, max_points: f64 },
    #[error("parameter {0:?} cannot be resolved")]
    ParameterUnresolvable(String),
    #[error("cannot read {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckScore {
    pub id: String,
    pub awarded: f64,
    pub possible: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub total: f64,
    pub max: f64,
    pub per_check: Vec<CheckScore>,
}

/// Additive scoring: the total is the sum of awarded points.
pub fn score(results: &[CheckResult], scoring: &Scoring) -> ScoreSummary {
    let ScoringMode::Additive = scoring.mode;
    let per_check: Vec<CheckScore> = results
        .iter()
        .map(|r| CheckScore {
            id: r.id.clone(),
            awarded: r.points_awarded,
            possible: r.points_possible,
        })
        .collect();
    ScoreSummary {
        total: per_check.iter().map(|c| c.awarded).sum(),
        max: scoring.max_points,
        per_check,
    }
}
