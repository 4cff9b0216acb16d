//! Scene snapshots: the canonical model of a rendered page.
//!
//! A snapshot is a JSON document (`.scene.json`) produced by the in-page
//! probe. It carries every element's attributes, a subset of computed
//! styles, the bound datum, and the browser-reported bounding box. This
//! module parses it into an immutable [`RenderedScene`], answers CSS-subset
//! queries against it, composes transforms into absolute geometry and
//! normalizes colors.

mod color;
mod geometry;
mod model;
mod named_colors;
mod selector;
mod transform;

pub use color::{parse_color, Color};
pub use geometry::{absolute_geometry, local_geometry, parse_length};
pub use model::{
    Ancestors, BBox, ElementData, ElementRef, RenderedScene, SceneElement, SnapshotDocument,
    Viewport, SUPPORTED_VERSIONS,
};
pub use selector::{Compound, Selector};
pub use transform::{effective_transform, parse_transform_list, Transform2D};

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("snapshot schema error: {0}")]
    Schema(String),
    #[error("unsupported selector {selector:?}: {reason}")]
    SelectorParse { selector: String, reason: String },
    #[error("malformed transform {0:?}")]
    TransformParse(String),
    #[error("element <{0}> has no geometry")]
    NoGeometry(String),
    #[error("cannot parse color {0:?}")]
    ColorParse(String),
}

const DOCUMENT_FIELDS: &[&str] = &["version", "url", "viewport", "root"];
const ELEMENT_FIELDS: &[&str] = &[
    "tag",
    "attrs",
    "computed_style",
    "datum",
    "bbox",
    "text",
    "children",
];

/// Parses snapshot bytes. Unknown fields are dropped with a logged warning.
pub fn parse_snapshot(bytes: &[u8]) -> Result<RenderedScene, SceneError> {
    let (scene, warnings) = parse_snapshot_with_warnings(bytes)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(scene)
}

/// Like [`parse_snapshot`], returning the unknown-field warnings instead of
/// logging them.
pub fn parse_snapshot_with_warnings(
    bytes: &[u8],
) -> Result<(RenderedScene, Vec<String>), SceneError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| SceneError::Schema(e.to_string()))?;
    let mut warnings = Vec::new();
    if let Some(obj) = value.as_object() {
        for k in obj.keys() {
            if !DOCUMENT_FIELDS.contains(&k.as_str()) {
                warnings.push(format!("ignoring unknown snapshot field {k:?}"));
            }
        }
        if let Some(root) = obj.get("root") {
            unknown_element_fields(root, "root", &mut warnings);
        }
    }
    let doc: SnapshotDocument =
        serde_json::from_value(value).map_err(|e| SceneError::Schema(e.to_string()))?;
    Ok((RenderedScene::from_document(doc)?, warnings))
}

fn unknown_element_fields(v: &Value, path: &str, warnings: &mut Vec<String>) {
    let Some(obj) = v.as_object() else { return };
    for k in obj.keys() {
        if !ELEMENT_FIELDS.contains(&k.as_str()) {
            warnings.push(format!("ignoring unknown element field {k:?} at {path}"));
        }
    }
    if let Some(children) = obj.get("children").and_then(Value::as_array) {
        for (i, c) in children.iter().enumerate() {
            unknown_element_fields(c, &format!("{path}/{i}"), warnings);
        }
    }
}

/// Serializes a scene back into snapshot JSON.
pub fn serialize_snapshot(scene: &RenderedScene) -> Vec<u8> {
    serde_json::to_vec_pretty(&scene.to_document()).expect("snapshot documents always serialize")
}

/// Elements matching `selector`, in document order.
pub fn query(scene: &RenderedScene, selector: &str) -> Result<Vec<ElementRef>, SceneError> {
    Ok(Selector::parse(selector)?.select(scene))
}
