use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::DeconstructError;
use crate::scene::{self, absolute_geometry, parse_color, BBox, Color, ElementRef, RenderedScene};

const NUMERIC_CHANNELS: &[&str] = &[
    "x", "y", "width", "height", "cx", "cy", "r", "rx", "ry", "x1", "y1", "x2", "y2", "opacity",
];
const COLOR_CHANNELS: &[&str] = &["fill", "stroke"];

/// Channels that carry a position along an axis.
pub const POSITIONAL_CHANNELS: &[&str] = &["x", "y", "cx", "cy", "x1", "y1", "x2", "y2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelValue {
    Number(f64),
    Color(Color),
    Text(String),
}

impl ChannelValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            ChannelValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_color(&self) -> Option<&Color> {
        match self {
            ChannelValue::Color(c) => Some(c),
            _ => None,
        }
    }

    /// Equality used for lookup consistency: numbers compare with a tiny
    /// relative tolerance, everything else exactly.
    pub fn same_as(&self, other: &ChannelValue) -> bool {
        match (self, other) {
            (ChannelValue::Number(a), ChannelValue::Number(b)) => {
                (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
            }
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for ChannelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelValue::Number(n) => write!(f, "{}", crate::format_number(*n)),
            ChannelValue::Color(c) => write!(f, "{c}"),
            ChannelValue::Text(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mark {
    pub element: ElementRef,
    pub tag: String,
    /// Absolute box in root coordinates; `None` when the element carries
    /// neither a probe bbox nor local geometry attributes.
    pub geometry: Option<BBox>,
    pub channels: BTreeMap<String, ChannelValue>,
    pub datum: Option<Value>,
}

impl Mark {
    pub fn channel(&self, name: &str) -> Option<&ChannelValue> {
        self.channels.get(name)
    }

    pub fn number(&self, name: &str) -> Option<f64> {
        self.channel(name).and_then(ChannelValue::as_number)
    }

    /// The mark as a JSON object (`channels` flattened, plus `datum` and
    /// `geometry`), used to expose marks to rubric expressions.
    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        for (k, v) in &self.channels {
            let jv = match v {
                ChannelValue::Number(n) => serde_json::json!(n),
                other => Value::String(other.to_string()),
            };
            obj.insert(k.clone(), jv);
        }
        if let Some(g) = &self.geometry {
            obj.insert("geometry".into(), serde_json::json!({"x": g.x, "y": g.y, "w": g.w, "h": g.h}));
        }
        obj.insert("datum".into(), self.datum.clone().unwrap_or(Value::Null));
        obj.insert("tag".into(), Value::String(self.tag.clone()));
        Value::Object(obj)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkGroup {
    pub anchor: String,
    pub marks: Vec<Mark>,
    pub mark_tag: String,
}

impl MarkGroup {
    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }
}

/// Builds a mark from one element: numeric geometry channels from
/// attributes, colors and opacity from computed style (falling back to
/// presentation attributes), and the text content when non-empty.
pub fn build_mark(scene: &RenderedScene, r: ElementRef) -> Mark {
    let el = scene.element(r);
    let mut channels = BTreeMap::new();
    for &name in NUMERIC_CHANNELS {
        let raw = if name == "opacity" {
            el.style_or_attr(name)
        } else {
            el.attrs.get(name).map(String::as_str)
        };
        if let Some(n) = raw.and_then(scene::parse_length) {
            channels.insert(name.to_string(), ChannelValue::Number(n));
        }
    }
    for &name in COLOR_CHANNELS {
        if let Some(c) = el.style_or_attr(name).and_then(|v| parse_color(v).ok()) {
            channels.insert(name.to_string(), ChannelValue::Color(c));
        }
    }
    let text = scene.text_content(r);
    if !text.trim().is_empty() {
        channels.insert("text".into(), ChannelValue::Text(text.trim().to_string()));
    }
    let geometry = match absolute_geometry(scene, r) {
        Ok(b) => Some(b),
        Err(scene::SceneError::NoGeometry(_)) => None,
        Err(e) => {
            log::warn!("no geometry for {}: {e}", scene.describe(r));
            None
        }
    };
    Mark {
        element: r,
        tag: el.tag.clone(),
        geometry,
        channels,
        datum: el.datum.clone(),
    }
}

/// Extracts every element matched by `anchor` as a mark.
pub fn extract_group(scene: &RenderedScene, anchor: &str) -> Result<MarkGroup, DeconstructError> {
    let refs = scene::query(scene, anchor)?;
    if refs.is_empty() {
        return Err(DeconstructError::AnchorNotFound(anchor.to_string()));
    }
    let marks: Vec<Mark> = refs.iter().map(|&r| build_mark(scene, r)).collect();
    Ok(MarkGroup {
        anchor: anchor.to_string(),
        mark_tag: dominant_tag(&marks),
        marks,
    })
}

/// Most frequent tag; ties go to the tag seen first in document order.
fn dominant_tag(marks: &[Mark]) -> String {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for m in marks {
        match counts.iter_mut().find(|(t, _)| *t == m.tag) {
            Some((_, n)) => *n += 1,
            None => counts.push((&m.tag, 1)),
        }
    }
    let mut best: Option<(&str, usize)> = None;
    for (t, n) in counts {
        if best.map_or(true, |(_, b)| n > b) {
            best = Some((t, n));
        }
    }
    best.map(|(t, _)| t.to_string()).unwrap_or_default()
}
