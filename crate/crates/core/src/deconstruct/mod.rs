//! Deconstruction: from a rendered scene back to marks, data bindings and
//! the scales that produced them.

mod bind;
mod infer;
mod marks;

pub use bind::{
    bind_data, check_completeness, field_value, key_string, Binding, CompletenessReport,
    CompletenessVerdict, ExtraMark, KeySpec, MatchedPair, MissingRow,
};
pub use infer::{
    infer_scale, scale_pairs, InferenceConfig, ScaleKind, ScaleModel, ScaleParams, ScalePair,
};
pub use marks::{build_mark, extract_group, ChannelValue, Mark, MarkGroup, POSITIONAL_CHANNELS};

use thiserror::Error;

use crate::scene::SceneError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeconstructError {
    #[error("no element matches anchor {0:?}")]
    AnchorNotFound(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("dataset key {0:?} occurs more than once")]
    AmbiguousKey(String),
    #[error("dataset key cannot be resolved: {0}")]
    KeyUnresolvable(String),
    #[error("no scale kind fits: {0}")]
    NoFit(String),
    #[error("need at least {needed} data/mark pairs, got {got}")]
    InsufficientData { needed: usize, got: usize },
}
