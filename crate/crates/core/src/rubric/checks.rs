use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::expr::{Expr, ExprValue, Scope};
use super::model::{Check, CheckSpec, Expected, ExpectedColor, TextMatcher, Tolerances};
use super::params::Environment;
use crate::deconstruct::{
    bind_data, check_completeness, extract_group, infer_scale, scale_pairs, DeconstructError,
    InferenceConfig, Mark, MarkGroup,
};
use crate::format_number;
use crate::scene::{self, parse_color, ElementRef, RenderedScene};

/// Attributes compared with the absolute pixel tolerance.
const GEOMETRY_ATTRS: &[&str] = &[
    "x", "y", "width", "height", "cx", "cy", "r", "rx", "ry", "x1", "y1", "x2", "y2",
];

/// How many per-element values to show in `observed`.
const OBSERVED_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub passed: bool,
    pub points_awarded: f64,
    pub points_possible: f64,
    pub observed: String,
    pub expected: String,
    pub feedback: String,
}

/// Everything a check may look at.
#[derive(Debug, Clone)]
pub struct CheckContext<'a> {
    pub scene: &'a RenderedScene,
    pub dataset: &'a [Value],
    pub env: &'a Environment,
    pub tolerances: Tolerances,
    pub inference: InferenceConfig,
    /// Results of interactions already run, by interaction id.
    pub interactions: &'a BTreeMap<String, CheckResult>,
}

struct Outcome {
    passed: bool,
    observed: String,
    expected: String,
    detail: String,
}

impl Outcome {
    fn fail(observed: impl Into<String>, expected: impl Into<String>, detail: impl Into<String>) -> Self {
        Outcome {
            passed: false,
            observed: observed.into(),
            expected: expected.into(),
            detail: detail.into(),
        }
    }
}

/// Fills `{id}`, `{expected}`, `{observed}`, `{detail}` and `{points}`.
pub fn render_template(template: &str, result: &CheckResult, detail: &str) -> String {
    template
        .replace("{id}", &result.id)
        .replace("{expected}", &result.expected)
        .replace("{observed}", &result.observed)
        .replace("{detail}", detail)
        .replace("{points}", &format_number(result.points_awarded))
}

/// Evaluates one check. Never fails: every problem, including unresolved
/// parameters and malformed scenes, yields a failing result whose
/// feedback says what went wrong.
pub fn run_check(check: &Check, ctx: &CheckContext<'_>) -> CheckResult {
    let outcome = match blocked_by(check, ctx.env) {
        Some((name, reason)) => Outcome::fail(
            "",
            "",
            format!("parameter {name:?} could not be resolved ({reason}), so this check cannot be graded"),
        ),
        None => evaluate(check, ctx),
    };
    let mut result = CheckResult {
        id: check.id.clone(),
        passed: outcome.passed,
        points_awarded: if outcome.passed { check.points } else { 0.0 },
        points_possible: check.points,
        observed: outcome.observed,
        expected: outcome.expected,
        feedback: String::new(),
    };
    let template = if outcome.passed {
        check.feedback_pass.as_deref()
    } else {
        check.feedback_fail.as_deref()
    };
    result.feedback = match template {
        Some(t) => render_template(t, &result, &outcome.detail),
        None => outcome.detail,
    };
    result
}

fn blocked_by<'e>(check: &Check, env: &'e Environment) -> Option<(String, &'e str)> {
    check
        .spec
        .expressions()
        .into_iter()
        .flat_map(Expr::free_names)
        .find_map(|n| env.unresolved_reason(n).map(|r| (n.to_string(), r)))
}

fn anchor_of(check: &Check) -> &str {
    check.anchor.as_deref().unwrap_or_default()
}

fn evaluate(check: &Check, ctx: &CheckContext<'_>) -> Outcome {
    let anchor = anchor_of(check);
    let scope = ctx.env.scope(ctx.dataset);
    match &check.spec {
        CheckSpec::AnchorExists => {
            let expected = format!("at least one element matching {anchor}");
            match scene::query(ctx.scene, anchor) {
                Ok(refs) if !refs.is_empty() => Outcome {
                    passed: true,
                    observed: format!("{} element(s)", refs.len()),
                    expected,
                    detail: format!("found {} element(s) matching {anchor}", refs.len()),
                },
                Ok(_) => Outcome::fail(
                    "0 elements",
                    expected,
                    format!(
                        "no element matches {anchor}; give the marks the tag, class or id the assignment asks for so they can be found"
                    ),
                ),
                Err(e) => Outcome::fail("", expected, e.to_string()),
            }
        }
        CheckSpec::MarkCount { expected } => {
            let want = match expected {
                Expected::Literal(v) => v.as_f64(),
                Expected::Expr(e) => e.eval(&scope).ok().and_then(|v| v.as_number()),
            };
            let Some(want) = want else {
                let msg = match expected {
                    Expected::Expr(e) => match e.eval(&scope) {
                        Err(err) => format!("cannot compute the expected count: {err}"),
                        Ok(v) => format!("expected count evaluated to {v}, which is not a number"),
                    },
                    Expected::Literal(v) => format!("expected count {v} is not a number"),
                };
                return Outcome::fail("", "", msg);
            };
            let n = match scene::query(ctx.scene, anchor) {
                Ok(r) => r.len(),
                Err(e) => return Outcome::fail("", format_number(want), e.to_string()),
            };
            let passed = (n as f64 - want).abs() < 1e-9;
            Outcome {
                passed,
                observed: n.to_string(),
                expected: format_number(want),
                detail: format!("found {n} element(s) matching {anchor}, expected {}", format_number(want)),
            }
        }
        CheckSpec::DataCompleteness { key, allow_missing } => {
            let expected = format!("all {} data row(s) plotted", ctx.dataset.len());
            let group = match group(ctx.scene, anchor) {
                Ok(g) => g,
                Err(o) => return o.with_expected(expected),
            };
            match bind_data(&group, ctx.dataset, key) {
                Err(e) => Outcome::fail("", expected, format!("cannot match marks to data: {e}")),
                Ok(binding) => {
                    let verdict = check_completeness(&binding.report, allow_missing);
                    let r = &binding.report;
                    Outcome {
                        passed: verdict.passed,
                        observed: format!("{} of {} row(s) plotted, {} extra mark(s)", r.plotted, r.expected, r.extra.len()),
                        expected,
                        detail: verdict.message,
                    }
                }
            }
        }
        CheckSpec::ScaleKind {
            field,
            channel,
            expected,
            key,
        } => {
            let exp = format!("{expected} scale from {field} to {channel}");
            let group = match group(ctx.scene, anchor) {
                Ok(g) => g,
                Err(o) => return o.with_expected(exp),
            };
            let binding = match bind_data(&group, ctx.dataset, key) {
                Ok(b) => b,
                Err(e) => return Outcome::fail("", exp, format!("cannot match marks to data: {e}")),
            };
            let pairs = scale_pairs(&group, &binding, ctx.dataset, field, channel);
            match infer_scale(&pairs, field, channel, &ctx.inference) {
                Ok(model) => {
                    let passed = model.kind == *expected;
                    Outcome {
                        passed,
                        observed: format!("{} scale", model.kind),
                        expected: exp,
                        detail: if passed {
                            format!("{channel} follows a {} scale of {field}", model.kind)
                        } else {
                            format!(
                                "{channel} follows a {} scale of {field}, but a {expected} scale was expected",
                                model.kind
                            )
                        },
                    }
                }
                Err(e) => Outcome::fail(
                    "no consistent scale",
                    exp,
                    format!("could not find any scale from {field} to {channel}: {e}; a {expected} scale was expected"),
                ),
            }
        }
        CheckSpec::AttrMatch {
            attr,
            expected,
            tolerance,
        } => {
            let want = match expected {
                Value::Number(n) => ExprValue::Number(n.as_f64().unwrap_or(f64::NAN)),
                Value::String(s) => ExprValue::Str(s.clone()),
                other => ExprValue::Json(other.clone()),
            };
            per_element(ctx, anchor, attr, |_, _| Ok(want.clone()), *tolerance)
        }
        CheckSpec::AttrExpr {
            attr,
            expected,
            tolerance,
        } => {
            let group = match group(ctx.scene, anchor) {
                Ok(g) => g,
                Err(o) => return o,
            };
            per_mark(ctx, &group, attr, &scope, expected, *tolerance)
        }
        CheckSpec::ColorMatch {
            channel,
            expected,
            tolerance,
        } => color_match(ctx, anchor, channel, expected, tolerance.unwrap_or(ctx.tolerances.color), &scope),
        CheckSpec::TextMatch { matcher } => text_match(ctx, anchor, matcher, &scope),
        CheckSpec::Interaction { interaction } => match ctx.interactions.get(interaction) {
            Some(r) => Outcome {
                passed: r.passed,
                observed: r.observed.clone(),
                expected: r.expected.clone(),
                detail: if r.passed {
                    format!("interaction {interaction} behaved as expected")
                } else {
                    r.feedback.clone()
                },
            },
            None => Outcome::fail(
                "",
                "",
                format!("interaction {interaction} was not run (no browser session or recording for it)"),
            ),
        },
    }
}

impl Outcome {
    fn with_expected(mut self, expected: String) -> Self {
        self.expected = expected;
        self
    }
}

fn group(scene: &RenderedScene, anchor: &str) -> Result<MarkGroup, Outcome> {
    extract_group(scene, anchor).map_err(|e| match e {
        DeconstructError::AnchorNotFound(a) => Outcome::fail(
            "0 elements",
            "",
            format!("no element matches {a}, so nothing could be graded"),
        ),
        other => Outcome::fail("", "", other.to_string()),
    })
}

fn mark_scope<'a>(parent: &'a Scope<'a>, mark: &Mark, index: usize) -> Scope<'a> {
    parent
        .child()
        .with("mark", ExprValue::Json(mark.to_json()))
        .with(
            "datum",
            mark.datum.as_ref().map(ExprValue::from_json).unwrap_or(ExprValue::Json(Value::Null)),
        )
        .with("index", ExprValue::Number(index as f64))
}

fn compare(
    attr: &str,
    observed: &str,
    expected: &ExprValue,
    tolerance: Option<f64>,
    defaults: &Tolerances,
) -> bool {
    match expected {
        ExprValue::Number(e) => match scene::parse_length(observed) {
            Some(o) => match tolerance {
                Some(t) => (o - e).abs() <= t,
                None if GEOMETRY_ATTRS.contains(&attr) => (o - e).abs() <= defaults.geometry_px,
                None => (o - e).abs() <= defaults.numeric_relative * e.abs().max(o.abs()),
            },
            None => false,
        },
        ExprValue::Str(s) => observed.trim() == s.trim(),
        ExprValue::Json(_) => false,
    }
}

fn join_limited(items: &[String]) -> String {
    let mut s = items.iter().take(OBSERVED_LIMIT).cloned().collect::<Vec<_>>().join(", ");
    if items.len() > OBSERVED_LIMIT {
        s.push_str(&format!(", ... ({} total)", items.len()));
    }
    s
}

/// Shared tail for per-element comparisons: `rows` holds, per element,
/// its label, the observed text and the expected value (or why it could
/// not be computed).
fn summarize(
    attr: &str,
    anchor: &str,
    rows: Vec<(String, Option<String>, Result<ExprValue, String>)>,
    ok: impl Fn(&str, &ExprValue) -> bool,
) -> Outcome {
    let observed: Vec<String> = rows
        .iter()
        .map(|(_, o, _)| o.clone().unwrap_or_else(|| "(none)".into()))
        .collect();
    let expected: Vec<String> = rows
        .iter()
        .map(|(_, _, e)| match e {
            Ok(v) => v.to_string(),
            Err(_) => "?".into(),
        })
        .collect();
    let mut problems = Vec::new();
    for (label, obs, exp) in &rows {
        match (obs, exp) {
            (_, Err(msg)) => problems.push(format!("{label}: {msg}")),
            (None, Ok(e)) => problems.push(format!("{label} has no {attr} (expected {e})")),
            (Some(o), Ok(e)) if !ok(o, e) => problems.push(format!("{label} has {attr}={o}, expected {e}")),
            _ => {}
        }
    }
    let n = rows.len();
    let uniform = |v: &[String]| {
        if !v.is_empty() && v.iter().all(|x| *x == v[0]) {
            v[0].clone()
        } else {
            join_limited(v)
        }
    };
    if problems.is_empty() {
        Outcome {
            passed: true,
            observed: uniform(&observed),
            expected: uniform(&expected),
            detail: format!("{attr} is correct on all {n} element(s) matching {anchor}"),
        }
    } else {
        let first = problems.iter().take(3).cloned().collect::<Vec<_>>().join("; ");
        Outcome::fail(
            uniform(&observed),
            uniform(&expected),
            format!("{} of {n} element(s) matching {anchor} are wrong: {first}", problems.len()),
        )
    }
}

fn per_element(
    ctx: &CheckContext<'_>,
    anchor: &str,
    attr: &str,
    expected_for: impl Fn(ElementRef, usize) -> Result<ExprValue, String>,
    tolerance: Option<f64>,
) -> Outcome {
    let refs = match scene::query(ctx.scene, anchor) {
        Ok(r) if !r.is_empty() => r,
        Ok(_) => return Outcome::fail("0 elements", "", format!("no element matches {anchor}")),
        Err(e) => return Outcome::fail("", "", e.to_string()),
    };
    let rows = refs
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let el = ctx.scene.element(r);
            (
                label(ctx.scene, r, i),
                el.attr_or_style(attr).map(str::to_string),
                expected_for(r, i),
            )
        })
        .collect();
    summarize(attr, anchor, rows, |o, e| compare(attr, o, e, tolerance, &ctx.tolerances))
}

fn label(scene: &RenderedScene, r: ElementRef, i: usize) -> String {
    format!("{} #{}", scene.describe(r), i + 1)
}

fn per_mark(
    ctx: &CheckContext<'_>,
    group: &MarkGroup,
    attr: &str,
    scope: &Scope<'_>,
    expected: &Expr,
    tolerance: Option<f64>,
) -> Outcome {
    let rows = group
        .marks
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let s = mark_scope(scope, m, i);
            let el = ctx.scene.element(m.element);
            (
                label(ctx.scene, m.element, i),
                el.attr_or_style(attr).map(str::to_string),
                expected.eval(&s).map_err(|e| format!("cannot compute expected {attr}: {e}")),
            )
        })
        .collect();
    summarize(attr, &group.anchor, rows, |o, e| compare(attr, o, e, tolerance, &ctx.tolerances))
}

fn color_match(
    ctx: &CheckContext<'_>,
    anchor: &str,
    channel: &str,
    expected: &ExpectedColor,
    tolerance: f64,
    scope: &Scope<'_>,
) -> Outcome {
    let group = match group(ctx.scene, anchor) {
        Ok(g) => g,
        Err(o) => return o,
    };
    let rows = group
        .marks
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let want = match expected {
                ExpectedColor::Literal(c) => Ok(ExprValue::Str(c.to_string())),
                ExpectedColor::Expr(e) => {
                    let s = mark_scope(scope, m, i);
                    e.eval(&s)
                        .map_err(|err| format!("cannot compute expected color: {err}"))
                        .and_then(|v| match parse_color(&v.to_string()) {
                            Ok(c) => Ok(ExprValue::Str(c.to_string())),
                            Err(err) => Err(format!("expected color {v:?} is not a color: {err}")),
                        })
                }
            };
            let observed = ctx
                .scene
                .element(m.element)
                .style_or_attr(channel)
                .map(|raw| match parse_color(raw) {
                    Ok(c) => c.to_string(),
                    Err(_) => raw.to_string(),
                });
            (label(ctx.scene, m.element, i), observed, want)
        })
        .collect();
    summarize(channel, anchor, rows, |o, e| {
        match (parse_color(o), parse_color(&e.to_string())) {
            (Ok(a), Ok(b)) => a.max_channel_delta(&b) <= tolerance,
            _ => false,
        }
    })
}

fn text_match(ctx: &CheckContext<'_>, anchor: &str, matcher: &TextMatcher, scope: &Scope<'_>) -> Outcome {
    let group = match group(ctx.scene, anchor) {
        Ok(g) => g,
        Err(o) => return o,
    };
    let rows = group
        .marks
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let text = ctx.scene.text_content(m.element).trim().to_string();
            let want = match matcher {
                TextMatcher::Exact(t) => Ok(ExprValue::Str(t.trim().to_string())),
                TextMatcher::Pattern(p) => Ok(ExprValue::Str(format!("/{}/", p.as_str()))),
                TextMatcher::Expr(e) => e
                    .eval(&mark_scope(scope, m, i))
                    .map(|v| ExprValue::Str(v.to_string()))
                    .map_err(|err| format!("cannot compute expected text: {err}")),
            };
            (label(ctx.scene, m.element, i), Some(text), want)
        })
        .collect();
    summarize("text", anchor, rows, |o, e| match matcher {
        TextMatcher::Pattern(p) => p.is_match(o),
        _ => o == e.to_string(),
    })
}

/// Runs every check in rubric order.
pub fn run_checks(checks: &[Check], ctx: &CheckContext<'_>) -> Vec<CheckResult> {
    checks.iter().map(|c| run_check(c, ctx)).collect()
}
