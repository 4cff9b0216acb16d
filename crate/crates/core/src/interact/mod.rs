//! Interaction grading: gestures compiled to input actions, scene players
//! that apply them, and scene diffs as evidence for expectations.

mod diff;
mod gesture;
mod grade;
mod player;

pub use diff::{diff_scenes, element_key, is_visible, AttrChange, SceneDiff};
pub use gesture::{compile_gesture, resolve_target};
pub use grade::grade_interaction;
pub use player::{probe_scene, LivePlayer, ScenePlayer, ScriptedPlayer};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::SceneError;
use crate::wire::WireError;

/// Default wait after the last gesture before the post-scene is captured.
pub const DEFAULT_SETTLE_MS: u64 = 300;
/// Default pause after a hover move.
pub const DEFAULT_DWELL_MS: u64 = 100;
/// Default duration of the drag movement.
pub const DEFAULT_DRAG_MS: u64 = 250;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InteractError {
    #[error("no element matches gesture target {0:?}")]
    TargetNotFound(String),
    #[error("gesture target {0:?} has no geometry")]
    NoGeometry(String),
    #[error("invalid gesture: {0}")]
    InvalidGesture(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("probe failed: {0}")]
    Probe(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureKind {
    Hover,
    Click,
    DragDrop,
    TypeText,
    KeyPress,
}

/// A selector (optionally picking the n-th match) or a viewport point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Selector(String),
    Indexed {
        selector: String,
        #[serde(default)]
        index: usize,
    },
    Point {
        x: f64,
        y: f64,
    },
}

impl Target {
    pub fn selector(&self) -> Option<(&str, usize)> {
        match self {
            Target::Selector(s) => Some((s, 0)),
            Target::Indexed { selector, index } => Some((selector, *index)),
            Target::Point { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gesture {
    pub kind: GestureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    /// Drop location for `drag_drop`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_target: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Single character or a named key (`Enter`, `Escape`, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    /// Hover pause in ms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell: Option<u64>,
    /// Drag movement duration in ms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<u64>,
}

impl Gesture {
    pub fn new(kind: GestureKind, target: Option<Target>) -> Self {
        Gesture {
            kind,
            target,
            secondary_target: None,
            text: None,
            key: None,
            dwell: None,
            duration: None,
        }
    }

    pub fn hover(selector: &str) -> Self {
        Gesture::new(GestureKind::Hover, Some(Target::Selector(selector.into())))
    }

    pub fn click(selector: &str) -> Self {
        Gesture::new(GestureKind::Click, Some(Target::Selector(selector.into())))
    }

    pub fn validate(&self) -> Result<(), InteractError> {
        let bad = |m: &str| Err(InteractError::InvalidGesture(m.to_string()));
        match self.kind {
            GestureKind::Hover | GestureKind::Click if self.target.is_none() => {
                bad("hover and click need a target")
            }
            GestureKind::DragDrop if self.target.is_none() || self.secondary_target.is_none() => {
                bad("drag_drop needs target and secondary_target")
            }
            GestureKind::TypeText if self.text.is_none() => bad("type_text needs text"),
            GestureKind::KeyPress => match &self.key {
                None => bad("key_press needs key"),
                Some(k) => gesture::key_char(k).map(|_| ()),
            },
            _ => Ok(()),
        }
    }
}

/// Post-conditions checked after an interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Expectation {
    ElementAppears {
        selector: String,
    },
    ElementDisappears {
        selector: String,
    },
    /// Exactly one of `expected` (literal), `pattern` (regex) or `expr`
    /// (expression; `datum` is the hovered mark's datum).
    TextMatches {
        selector: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pattern: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expr: Option<String>,
    },
    AttrChanged {
        selector: String,
        attr: String,
    },
}

impl Expectation {
    pub fn selector(&self) -> &str {
        match self {
            Expectation::ElementAppears { selector }
            | Expectation::ElementDisappears { selector }
            | Expectation::TextMatches { selector, .. }
            | Expectation::AttrChanged { selector, .. } => selector,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        crate::scene::Selector::parse(self.selector()).map_err(|e| e.to_string())?;
        if let Expectation::TextMatches {
            expected,
            pattern,
            expr,
            ..
        } = self
        {
            let given = [expected.is_some(), pattern.is_some(), expr.is_some()]
                .iter()
                .filter(|b| **b)
                .count();
            if given != 1 {
                return Err("text_matches needs exactly one of expected, pattern, expr".into());
            }
            if let Some(p) = pattern {
                regex::Regex::new(p).map_err(|e| format!("bad pattern {p:?}: {e}"))?;
            }
            if let Some(e) = expr {
                crate::rubric::expr::Expr::parse(e).map_err(|err| format!("bad expression {e:?}: {err}"))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    pub id: String,
    pub gestures: Vec<Gesture>,
    pub expect: Vec<Expectation>,
    /// Wait in ms after the last gesture.
    #[serde(default = "default_settle")]
    pub settle: u64,
}

fn default_settle() -> u64 {
    DEFAULT_SETTLE_MS
}

impl InteractionSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.gestures.is_empty() {
            return Err(format!("interaction {:?} has no gestures", self.id));
        }
        if self.expect.is_empty() {
            return Err(format!("interaction {:?} has no expectations", self.id));
        }
        for g in &self.gestures {
            g.validate().map_err(|e| format!("interaction {:?}: {e}", self.id))?;
            for t in [&g.target, &g.secondary_target].into_iter().flatten() {
                if let Some((sel, _)) = t.selector() {
                    crate::scene::Selector::parse(sel)
                        .map_err(|e| format!("interaction {:?}: {e}", self.id))?;
                }
            }
        }
        for e in &self.expect {
            e.validate().map_err(|m| format!("interaction {:?}: {m}", self.id))?;
        }
        Ok(())
    }
}
