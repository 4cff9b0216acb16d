//! Re-creates a submission's environment: stage its files with pinned
//! library copies and datasets, serve them on loopback, and wait for the
//! page to finish rendering.

mod manifest;
mod readiness;
mod serve;
mod stage;

pub use manifest::{check_relative, DatasetFile, PinnedResource, SubmissionManifest};
pub use readiness::{
    await_render, await_render_with, session_counter, AnchorRequirement, ReadinessPolicy,
    RenderOutcome,
};
pub use serve::{media_type, serve, SiteServer};
pub use stage::{stage_submission, StagedSite};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("missing required file(s): {}", .0.join(", "))]
    MissingFiles(Vec<String>),
    #[error("path escapes the submission root: {0}")]
    PathEscape(String),
    #[error("cannot bind a loopback port: {0}")]
    BindFailure(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("invalid readiness policy: {0}")]
    Policy(String),
    #[error("{0}")]
    Io(String),
}
