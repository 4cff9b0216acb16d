use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::expr::Expr;
use super::RubricError;
use crate::deconstruct::{InferenceConfig, KeySpec, ScaleKind};
use crate::interact::InteractionSpec;
use crate::scene::{parse_color, Color, Selector};

pub const SUPPORTED_RUBRIC_VERSIONS: &[u32] = &[1];

/// Default comparison tolerances; each check may override them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute, in px, for geometry attributes.
    pub geometry_px: f64,
    /// Per 0-255 channel.
    pub color: f64,
    /// Relative, for other numeric attributes.
    pub numeric_relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            geometry_px: 1.0,
            color: 0.0,
            numeric_relative: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParameterSource {
    Attr { selector: String, attr: String },
    Style { selector: String, style: String },
    Expr { expr: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    #[serde(flatten)]
    pub source: ParameterSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Inline { rows: Vec<Value> },
    /// `.csv` or `.json` (array of rows), relative to the rubric file.
    File { file: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    Additive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scoring {
    pub mode: ScoringMode,
    pub max_points: f64,
}

/// An expected value given either as a literal or as an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expected {
    Literal(Value),
    Expr(Expr),
}

/// How text is compared.
#[derive(Debug, Clone)]
pub enum TextMatcher {
    Exact(String),
    Expr(Expr),
    Pattern(Regex),
}

impl PartialEq for TextMatcher {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TextMatcher::Exact(a), TextMatcher::Exact(b)) => a == b,
            (TextMatcher::Expr(a), TextMatcher::Expr(b)) => a == b,
            (TextMatcher::Pattern(a), TextMatcher::Pattern(b)) => a.as_str() == b.as_str(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpectedColor {
    Literal(Color),
    Expr(Expr),
}

/// A check's type together with its validated arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckSpec {
    AnchorExists,
    MarkCount {
        expected: Expected,
    },
    DataCompleteness {
        key: KeySpec,
        allow_missing: Vec<String>,
    },
    ScaleKind {
        field: String,
        channel: String,
        expected: ScaleKind,
        key: KeySpec,
    },
    AttrMatch {
        attr: String,
        expected: Value,
        tolerance: Option<f64>,
    },
    AttrExpr {
        attr: String,
        expected: Expr,
        tolerance: Option<f64>,
    },
    ColorMatch {
        channel: String,
        expected: ExpectedColor,
        tolerance: Option<f64>,
    },
    TextMatch {
        matcher: TextMatcher,
    },
    Interaction {
        interaction: String,
    },
}

impl CheckSpec {
    pub fn type_name(&self) -> &'static str {
        match self {
            CheckSpec::AnchorExists => "anchor_exists",
            CheckSpec::MarkCount { .. } => "mark_count",
            CheckSpec::DataCompleteness { .. } => "data_completeness",
            CheckSpec::ScaleKind { .. } => "scale_kind",
            CheckSpec::AttrMatch { .. } => "attr_match",
            CheckSpec::AttrExpr { .. } => "attr_expr",
            CheckSpec::ColorMatch { .. } => "color_match",
            CheckSpec::TextMatch { .. } => "text_match",
            CheckSpec::Interaction { .. } => "interaction",
        }
    }

    /// Expressions this check evaluates.
    pub fn expressions(&self) -> Vec<&Expr> {
        match self {
            CheckSpec::MarkCount {
                expected: Expected::Expr(e),
            }
            | CheckSpec::AttrExpr { expected: e, .. }
            | CheckSpec::ColorMatch {
                expected: ExpectedColor::Expr(e),
                ..
            }
            | CheckSpec::TextMatch {
                matcher: TextMatcher::Expr(e),
            } => vec![e],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: String,
    pub points: f64,
    pub anchor: Option<String>,
    pub spec: CheckSpec,
    pub feedback_pass: Option<String>,
    pub feedback_fail: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rubric {
    pub version: u32,
    pub parameters: Vec<Parameter>,
    pub dataset: Option<DatasetSource>,
    pub checks: Vec<Check>,
    pub interactions: Vec<InteractionSpec>,
    pub scoring: Scoring,
    pub tolerances: Tolerances,
    pub inference: InferenceConfig,
    /// Directory dataset file references resolve against.
    pub base_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRubric {
    version: u32,
    #[serde(default)]
    parameters: Vec<Parameter>,
    #[serde(default)]
    dataset: Option<DatasetSource>,
    checks: Vec<RawCheck>,
    #[serde(default)]
    interactions: Vec<InteractionSpec>,
    scoring: Scoring,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    inference: InferenceConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    id: String,
    #[serde(rename = "type")]
    kind: String,
    points: f64,
    #[serde(default)]
    anchor: Option<String>,
    #[serde(default)]
    args: Value,
    #[serde(default)]
    feedback_pass: Option<String>,
    #[serde(default)]
    feedback_fail: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkCountArgs {
    expected: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompletenessArgs {
    key: KeySpec,
    #[serde(default)]
    allow_missing: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaleArgs {
    field: String,
    channel: String,
    expected: ScaleKind,
    #[serde(default = "positional")]
    key: KeySpec,
}

fn positional() -> KeySpec {
    KeySpec::Positional
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttrMatchArgs {
    attr: String,
    expected: Value,
    #[serde(default)]
    tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttrExprArgs {
    attr: String,
    expected: String,
    #[serde(default)]
    tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ColorArgs {
    #[serde(default = "fill")]
    channel: String,
    #[serde(default)]
    expected: Option<String>,
    #[serde(default)]
    expected_expr: Option<String>,
    #[serde(default)]
    tolerance: Option<f64>,
}

fn fill() -> String {
    "fill".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TextArgs {
    #[serde(default)]
    expected: Option<String>,
    #[serde(default)]
    expected_expr: Option<String>,
    #[serde(default)]
    pattern: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InteractionArgs {
    interaction: String,
}

fn args<T: serde::de::DeserializeOwned>(id: &str, v: &Value) -> Result<T, RubricError> {
    let v = if v.is_null() {
        Value::Object(Default::default())
    } else {
        v.clone()
    };
    serde_json::from_value(v).map_err(|e| RubricError::Schema(format!("check {id:?} args: {e}")))
}

fn parse_expr(id: &str, src: &str) -> Result<Expr, RubricError> {
    Expr::parse(src).map_err(|e| RubricError::Schema(format!("check {id:?}: bad expression {src:?}: {e}")))
}

fn check_tolerance(id: &str, t: Option<f64>) -> Result<Option<f64>, RubricError> {
    match t {
        Some(t) if !(t >= 0.0 && t.is_finite()) => Err(RubricError::Schema(format!(
            "check {id:?}: tolerance must be a non-negative number"
        ))),
        other => Ok(other),
    }
}

fn build_spec(raw: &RawCheck) -> Result<CheckSpec, RubricError> {
    let id = raw.id.as_str();
    let schema = |m: String| RubricError::Schema(format!("check {id:?}: {m}"));
    Ok(match raw.kind.as_str() {
        "anchor_exists" => {
            if !raw.args.is_null() && raw.args.as_object().is_some_and(|o| !o.is_empty()) {
                return Err(schema("anchor_exists takes no args".into()));
            }
            CheckSpec::AnchorExists
        }
        "mark_count" => {
            let a: MarkCountArgs = args(id, &raw.args)?;
            let expected = match a.expected {
                Value::String(s) => Expected::Expr(parse_expr(id, &s)?),
                Value::Number(n) => Expected::Literal(Value::Number(n)),
                other => return Err(schema(format!("expected must be a number or expression, got {other}"))),
            };
            CheckSpec::MarkCount { expected }
        }
        "data_completeness" => {
            let a: CompletenessArgs = args(id, &raw.args)?;
            CheckSpec::DataCompleteness {
                key: a.key,
                allow_missing: a.allow_missing.iter().map(crate::deconstruct::key_string).collect(),
            }
        }
        "scale_kind" => {
            let a: ScaleArgs = args(id, &raw.args)?;
            CheckSpec::ScaleKind {
                field: a.field,
                channel: a.channel,
                expected: a.expected,
                key: a.key,
            }
        }
        "attr_match" => {
            let a: AttrMatchArgs = args(id, &raw.args)?;
            if !(a.expected.is_number() || a.expected.is_string()) {
                return Err(schema("attr_match expected must be a number or string".into()));
            }
            CheckSpec::AttrMatch {
                attr: a.attr,
                expected: a.expected,
                tolerance: check_tolerance(id, a.tolerance)?,
            }
        }
        "attr_expr" => {
            let a: AttrExprArgs = args(id, &raw.args)?;
            CheckSpec::AttrExpr {
                attr: a.attr,
                expected: parse_expr(id, &a.expected)?,
                tolerance: check_tolerance(id, a.tolerance)?,
            }
        }
        "color_match" => {
            let a: ColorArgs = args(id, &raw.args)?;
            let expected = match (a.expected, a.expected_expr) {
                (Some(c), None) => ExpectedColor::Literal(
                    parse_color(&c).map_err(|e| schema(format!("expected color: {e}")))?,
                ),
                (None, Some(e)) => ExpectedColor::Expr(parse_expr(id, &e)?),
                _ => return Err(schema("color_match needs exactly one of expected, expected_expr".into())),
            };
            CheckSpec::ColorMatch {
                channel: a.channel,
                expected,
                tolerance: check_tolerance(id, a.tolerance)?,
            }
        }
        "text_match" => {
            let a: TextArgs = args(id, &raw.args)?;
            let matcher = match (a.expected, a.expected_expr, a.pattern) {
                (Some(t), None, None) => TextMatcher::Exact(t),
                (None, Some(e), None) => TextMatcher::Expr(parse_expr(id, &e)?),
                (None, None, Some(p)) => TextMatcher::Pattern(
                    Regex::new(&p).map_err(|e| schema(format!("bad pattern {p:?}: {e}")))?,
                ),
                _ => return Err(schema("text_match needs exactly one of expected, expected_expr, pattern".into())),
            };
            CheckSpec::TextMatch { matcher }
        }
        "interaction" => {
            let a: InteractionArgs = args(id, &raw.args)?;
            CheckSpec::Interaction {
                interaction: a.interaction,
            }
        }
        other => return Err(RubricError::Schema(format!("check {id:?}: unknown check type {other:?}"))),
    })
}

/// Parses and validates a rubric. Dataset file references stay relative
/// until [`Rubric::base_dir`] is set (see [`load_rubric_file`]).
pub fn load_rubric(bytes: &[u8]) -> Result<Rubric, RubricError> {
    let raw: RawRubric = serde_json::from_slice(bytes).map_err(|e| RubricError::Schema(e.to_string()))?;
    if !SUPPORTED_RUBRIC_VERSIONS.contains(&raw.version) {
        return Err(RubricError::Schema(format!("unsupported rubric version {}", raw.version)));
    }
    let mut names = BTreeSet::new();
    for p in &raw.parameters {
        if p.name.is_empty() {
            return Err(RubricError::Schema("parameter with empty name".into()));
        }
        match &p.source {
            ParameterSource::Attr { selector, .. } | ParameterSource::Style { selector, .. } => {
                Selector::parse(selector)
                    .map_err(|e| RubricError::Schema(format!("parameter {:?}: {e}", p.name)))?;
            }
            ParameterSource::Expr { expr } => {
                let e = Expr::parse(expr)
                    .map_err(|e| RubricError::Schema(format!("parameter {:?}: {e}", p.name)))?;
                for n in e.free_names() {
                    if !names.contains(n) {
                        return Err(RubricError::Schema(format!(
                            "parameter {:?} refers to {n:?}, which is not an earlier parameter",
                            p.name
                        )));
                    }
                }
            }
        }
        if !names.insert(p.name.as_str()) {
            return Err(RubricError::Schema(format!("duplicate parameter {:?}", p.name)));
        }
    }
    let mut interaction_ids = BTreeSet::new();
    for i in &raw.interactions {
        i.validate().map_err(RubricError::Schema)?;
        if !interaction_ids.insert(i.id.as_str()) {
            return Err(RubricError::Schema(format!("duplicate interaction {:?}", i.id)));
        }
    }
    let mut ids = BTreeSet::new();
    let mut checks = Vec::with_capacity(raw.checks.len());
    for rc in &raw.checks {
        if !ids.insert(rc.id.as_str()) {
            return Err(RubricError::DuplicateCheckId(rc.id.clone()));
        }
        if !(rc.points >= 0.0 && rc.points.is_finite()) {
            return Err(RubricError::Schema(format!("check {:?}: points must be non-negative", rc.id)));
        }
        let spec = build_spec(rc)?;
        match (&spec, &rc.anchor) {
            (CheckSpec::Interaction { interaction }, _) => {
                if !interaction_ids.contains(interaction.as_str()) {
                    return Err(RubricError::Schema(format!(
                        "check {:?} refers to unknown interaction {interaction:?}",
                        rc.id
                    )));
                }
            }
            (_, None) => {
                return Err(RubricError::Schema(format!("check {:?} needs an anchor", rc.id)));
            }
            (_, Some(a)) => {
                Selector::parse(a).map_err(|e| RubricError::Schema(format!("check {:?}: {e}", rc.id)))?;
            }
        }
        checks.push(Check {
            id: rc.id.clone(),
            points: rc.points,
            anchor: rc.anchor.clone(),
            spec,
            feedback_pass: rc.feedback_pass.clone(),
            feedback_fail: rc.feedback_fail.clone(),
        });
    }
    let total: f64 = checks.iter().map(|c| c.points).sum();
    if (total - raw.scoring.max_points).abs() > 1e-9 {
        return Err(RubricError::PointsMismatch {
            total,
            max_points: raw.scoring.max_points,
        });
    }
    Ok(Rubric {
        version: raw.version,
        parameters: raw.parameters,
        dataset: raw.dataset,
        checks,
        interactions: raw.interactions,
        scoring: raw.scoring,
        tolerances: raw.tolerances,
        inference: raw.inference,
        base_dir: None,
    })
}

pub fn load_rubric_file(path: &Path) -> Result<Rubric, RubricError> {
    let bytes = std::fs::read(path).map_err(|e| RubricError::Io(format!("{}: {e}", path.display())))?;
    let mut r = load_rubric(&bytes)?;
    r.base_dir = path.parent().map(Path::to_path_buf);
    Ok(r)
}

impl Rubric {
    pub fn interaction(&self, id: &str) -> Option<&InteractionSpec> {
        self.interactions.iter().find(|i| i.id == id)
    }

    /// Dataset rows: inline, or read from the referenced file.
    pub fn load_dataset(&self) -> Result<Vec<Value>, RubricError> {
        match &self.dataset {
            None => Ok(Vec::new()),
            Some(DatasetSource::Inline { rows }) => Ok(rows.clone()),
            Some(DatasetSource::File { file }) => {
                let path = match &self.base_dir {
                    Some(d) => d.join(file),
                    None => PathBuf::from(file),
                };
                super::dataset::load_dataset_file(&path)
            }
        }
    }
}
