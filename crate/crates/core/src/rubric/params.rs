use std::collections::BTreeMap;

use serde_json::Value;

use super::expr::{eval_expression, ExprValue, Scope};
use super::model::{ParameterSource, Rubric};
use super::RubricError;
use crate::scene::{self, RenderedScene};

/// Parameter values resolved against one student's scene, plus the
/// parameters that could not be resolved and why.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Environment {
    pub values: BTreeMap<String, ExprValue>,
    pub unresolved: BTreeMap<String, String>,
}

impl Environment {
    pub fn get(&self, name: &str) -> Option<&ExprValue> {
        self.values.get(name)
    }

    /// A scope holding every resolved parameter.
    pub fn scope<'a>(&self, dataset: &'a [Value]) -> Scope<'a> {
        let mut s = Scope::new(dataset);
        for (k, v) in &self.values {
            s.set(k.clone(), v.clone());
        }
        s
    }

    /// Why `name` is unavailable, if it is an unresolved parameter.
    pub fn unresolved_reason(&self, name: &str) -> Option<&str> {
        self.unresolved.get(name).map(String::as_str)
    }
}

/// Resolves parameters in declaration order. Selector parameters read the
/// first match's attribute or computed style; expression parameters are
/// evaluated over earlier parameters and the dataset. Failures are
/// recorded, not raised, and make dependent parameters unresolved too.
pub fn resolve_parameters(rubric: &Rubric, scene: &RenderedScene, dataset: &[Value]) -> Environment {
    let mut env = Environment::default();
    for p in &rubric.parameters {
        let result: Result<ExprValue, String> = match &p.source {
            ParameterSource::Attr { selector, attr: name } | ParameterSource::Style { selector, style: name } => {
                let is_style = matches!(p.source, ParameterSource::Style { .. });
                match scene::query(scene, selector) {
                    Err(e) => Err(e.to_string()),
                    Ok(refs) => match refs.first() {
                        None => Err(format!("selector {selector:?} matched nothing")),
                        Some(&r) => {
                            let el = scene.element(r);
                            let raw = if is_style {
                                el.style_or_attr(name)
                            } else {
                                el.attr_or_style(name)
                            };
                            raw.map(ExprValue::from_attr).ok_or_else(|| {
                                format!("{} has no {name:?}", scene.describe(r))
                            })
                        }
                    },
                }
            }
            ParameterSource::Expr { expr } => {
                let blocked = super::expr::Expr::parse(expr)
                    .ok()
                    .and_then(|e| {
                        e.free_names()
                            .into_iter()
                            .find(|n| env.unresolved.contains_key(*n))
                            .map(str::to_string)
                    });
                match blocked {
                    Some(n) => Err(format!("depends on unresolved parameter {n:?}")),
                    None => {
                        let scope = env.scope(dataset);
                        eval_expression(expr, &scope).map_err(|e| e.to_string())
                    }
                }
            }
        };
        match result {
            Ok(v) => {
                env.values.insert(p.name.clone(), v);
            }
            Err(reason) => {
                log::debug!("parameter {} unresolved: {reason}", p.name);
                env.unresolved.insert(p.name.clone(), reason);
            }
        }
    }
    env
}

/// Like [`resolve_parameters`] but fails on the first unresolved
/// parameter.
pub fn resolve_parameters_strict(
    rubric: &Rubric,
    scene: &RenderedScene,
    dataset: &[Value],
) -> Result<Environment, RubricError> {
    let env = resolve_parameters(rubric, scene, dataset);
    if let Some(p) = rubric.parameters.iter().find(|p| env.unresolved.contains_key(&p.name)) {
        return Err(RubricError::ParameterUnresolvable(p.name.clone()));
    }
    Ok(env)
}
