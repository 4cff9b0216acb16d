//! Scale inference: recover the data-to-channel mapping a chart used from
//! (data value, rendered channel value) pairs.
//!
//! Candidates are tried in a fixed order, simplest numeric explanation
//! first: linear, log, band (positional channels only), ordinal. The first
//! candidate whose fit is within tolerance wins.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::bind::{field_value, key_string, Binding};
use super::marks::{ChannelValue, MarkGroup, POSITIONAL_CHANNELS};
use super::DeconstructError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleKind {
    Linear,
    Log,
    Ordinal,
    Band,
}

impl fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleKind::Linear => "linear",
            ScaleKind::Log => "log",
            ScaleKind::Ordinal => "ordinal",
            ScaleKind::Band => "band",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScaleParams {
    Linear {
        slope: f64,
        intercept: f64,
    },
    /// `value = slope · log_base(datum) + intercept`
    Log {
        base: f64,
        slope: f64,
        intercept: f64,
    },
    Ordinal {
        table: BTreeMap<String, ChannelValue>,
    },
    Band {
        step: f64,
        bandwidth: f64,
        origin: f64,
        /// Categories in position order.
        domain: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleModel {
    pub kind: ScaleKind,
    pub field: String,
    pub channel: String,
    pub params: ScaleParams,
    /// Root-mean-square error as a fraction of the channel's range.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub residual_threshold: f64,
    pub band_tolerance_px: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            residual_threshold: 1e-3,
            band_tolerance_px: 0.5,
        }
    }
}

/// One observation: the datum's field value and the mark's channel value.
/// `extent` is the mark's size along the channel's axis (width for x,
/// height for y) and is only needed for band detection.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalePair {
    pub field: Value,
    pub channel: ChannelValue,
    pub extent: Option<f64>,
}

/// Builds inference pairs from bound marks, reading `field` from the
/// matched dataset row.
pub fn scale_pairs(
    group: &MarkGroup,
    binding: &Binding,
    rows: &[Value],
    field: &str,
    channel: &str,
) -> Vec<ScalePair> {
    let extent_channel = match channel {
        "x" | "x1" | "x2" => Some(("width", 1.0)),
        "y" | "y1" | "y2" => Some(("height", 1.0)),
        "cx" | "cy" => Some(("r", 2.0)),
        _ => None,
    };
    binding
        .pairs
        .iter()
        .filter_map(|p| {
            let mark = &group.marks[p.mark];
            let field = field_value(&rows[p.row], field)?.clone();
            let channel_value = mark.channel(channel)?.clone();
            let extent = extent_channel.and_then(|(c, k)| mark.number(c).map(|v| v * k));
            Some(ScalePair {
                field,
                channel: channel_value,
                extent,
            })
        })
        .collect()
}

fn value_rank(v: &Value) -> u8 {
    match v {
        Value::Null => 0,
        Value::Bool(_) => 1,
        Value::Number(_) => 2,
        Value::String(_) => 3,
        Value::Array(_) => 4,
        Value::Object(_) => 5,
    }
}

fn cmp_values(a: &Value, b: &Value) -> Ordering {
    value_rank(a).cmp(&value_rank(b)).then_with(|| match (a, b) {
        (Value::Number(x), Value::Number(y)) => x
            .as_f64()
            .unwrap_or(f64::NAN)
            .total_cmp(&y.as_f64().unwrap_or(f64::NAN)),
        _ => key_string(a).cmp(&key_string(b)),
    })
}

fn cmp_channels(a: &ChannelValue, b: &ChannelValue) -> Ordering {
    match (a, b) {
        (ChannelValue::Number(x), ChannelValue::Number(y)) => x.total_cmp(y),
        _ => a.to_string().cmp(&b.to_string()),
    }
}

struct LineFit {
    slope: f64,
    intercept: f64,
    residual: f64,
}

fn range(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn normalized_rmse(sum_sq: f64, n: usize, ys: &[f64]) -> f64 {
    let rmse = (sum_sq / n as f64).sqrt();
    let r = range(ys);
    if r > 0.0 {
        rmse / r
    } else {
        rmse
    }
}

/// Ordinary least squares `y ≈ slope·x + intercept`. Returns `None` when
/// the x values are all equal.
fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let spread = xs.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= (spread * 1e-12).powi(2) * n {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sum_sq: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    Some(LineFit {
        slope,
        intercept,
        residual: normalized_rmse(sum_sq, xs.len(), ys),
    })
}

/// Classifies the pairs into a scale model.
///
/// The result does not depend on the order of `pairs`: they are sorted
/// canonically before fitting.
pub fn infer_scale(
    pairs: &[ScalePair],
    field: &str,
    channel: &str,
    config: &InferenceConfig,
) -> Result<ScaleModel, DeconstructError> {
    if pairs.is_empty() {
        return Err(DeconstructError::InsufficientData { needed: 1, got: 0 });
    }
    let mut pairs: Vec<&ScalePair> = pairs.iter().collect();
    pairs.sort_by(|a, b| {
        cmp_values(&a.field, &b.field)
            .then_with(|| cmp_channels(&a.channel, &b.channel))
            .then_with(|| {
                a.extent
                    .unwrap_or(f64::NAN)
                    .total_cmp(&b.extent.unwrap_or(f64::NAN))
            })
    });
    let model = |kind, params, residual| ScaleModel {
        kind,
        field: field.to_string(),
        channel: channel.to_string(),
        params,
        residual,
    };

    let xs: Option<Vec<f64>> = pairs.iter().map(|p| p.field.as_f64()).collect();
    let ys: Option<Vec<f64>> = pairs.iter().map(|p| p.channel.as_number()).collect();
    let numeric_ok = pairs.len() >= 3;

    if let (Some(xs), Some(ys), true) = (&xs, &ys, numeric_ok) {
        if let Some(fit) = fit_line(xs, ys) {
            if fit.residual <= config.residual_threshold {
                return Ok(model(
                    ScaleKind::Linear,
                    ScaleParams::Linear {
                        slope: fit.slope,
                        intercept: fit.intercept,
                    },
                    fit.residual,
                ));
            }
        }
        if xs.iter().all(|&x| x > 0.0) {
            let logs: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
            if let Some(fit) = fit_line(&logs, ys) {
                if fit.residual <= config.residual_threshold {
                    return Ok(model(
                        ScaleKind::Log,
                        ScaleParams::Log {
                            base: 10.0,
                            slope: fit.slope,
                            intercept: fit.intercept,
                        },
                        fit.residual,
                    ));
                }
            }
        }
    }

    if numeric_ok && POSITIONAL_CHANNELS.contains(&channel) {
        if let Some((params, residual)) = fit_band(&pairs, config) {
            return Ok(model(ScaleKind::Band, params, residual));
        }
    }

    if let Some(table) = lookup_table(&pairs) {
        return Ok(model(ScaleKind::Ordinal, ScaleParams::Ordinal { table }, 0.0));
    }

    if !numeric_ok && xs.is_some() && ys.is_some() {
        return Err(DeconstructError::InsufficientData {
            needed: 3,
            got: pairs.len(),
        });
    }
    Err(DeconstructError::NoFit(format!(
        "no linear, log, band or ordinal mapping explains {field} -> {channel} over {} marks",
        pairs.len()
    )))
}

/// Each distinct field value maps to exactly one channel value.
fn lookup_table(pairs: &[&ScalePair]) -> Option<BTreeMap<String, ChannelValue>> {
    let mut table: BTreeMap<String, ChannelValue> = BTreeMap::new();
    for p in pairs {
        let k = key_string(&p.field);
        match table.get(&k) {
            Some(existing) if !existing.same_as(&p.channel) => return None,
            Some(_) => {}
            None => {
                table.insert(k, p.channel.clone());
            }
        }
    }
    Some(table)
}

/// Evenly spaced categories of constant width: positions lie on
/// `origin + i·step` and every extent is within tolerance of the mean.
fn fit_band(pairs: &[&ScalePair], config: &InferenceConfig) -> Option<(ScaleParams, f64)> {
    let tol = config.band_tolerance_px;
    let mut categories: Vec<(String, Vec<f64>)> = Vec::new();
    let mut extents = Vec::with_capacity(pairs.len());
    for p in pairs {
        let pos = p.channel.as_number()?;
        extents.push(p.extent?);
        let k = key_string(&p.field);
        match categories.iter_mut().find(|(c, _)| *c == k) {
            Some((_, v)) => v.push(pos),
            None => categories.push((k, vec![pos])),
        }
    }
    if categories.len() < 2 {
        return None;
    }
    let mut centers: Vec<(String, f64)> = Vec::with_capacity(categories.len());
    for (k, positions) in categories {
        let mean = positions.iter().sum::<f64>() / positions.len() as f64;
        if positions.iter().any(|p| (p - mean).abs() > tol) {
            return None;
        }
        centers.push((k, mean));
    }
    centers.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));

    let idx: Vec<f64> = (0..centers.len()).map(|i| i as f64).collect();
    let pos: Vec<f64> = centers.iter().map(|c| c.1).collect();
    let fit = fit_line(&idx, &pos)?;
    if fit.slope <= tol {
        return None;
    }
    let mut sum_sq = 0.0;
    for (i, p) in pos.iter().enumerate() {
        let e = p - (fit.intercept + fit.slope * i as f64);
        if e.abs() > tol {
            return None;
        }
        sum_sq += e * e;
    }
    let bandwidth = extents.iter().sum::<f64>() / extents.len() as f64;
    if bandwidth <= 0.0 || extents.iter().any(|w| (w - bandwidth).abs() > tol) {
        return None;
    }
    Some((
        ScaleParams::Band {
            step: fit.slope,
            bandwidth,
            origin: fit.intercept,
            domain: centers.into_iter().map(|c| c.0).collect(),
        },
        normalized_rmse(sum_sq, pos.len(), &pos),
    ))
}
