use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::SceneError;

/// Snapshot format versions this crate understands.
pub const SUPPORTED_VERSIONS: &[u32] = &[1];

const CONTAINER_TAGS: &[&str] = &["#document", "document", "html", "body", "svg", "div"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

/// Axis-aligned box in root (page) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "w", alias = "width")]
    pub w: f64,
    #[serde(rename = "h", alias = "height")]
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }
}

/// One node of a snapshot document, in its nested wire form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneElement {
    pub tag: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub computed_style: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    /// Direct text content of the node, excluding descendants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default)]
    pub children: Vec<SceneElement>,
}

impl SceneElement {
    pub fn new(tag: impl Into<String>) -> Self {
        SceneElement {
            tag: tag.into(),
            attrs: BTreeMap::new(),
            computed_style: BTreeMap::new(),
            datum: None,
            bbox: None,
            text: None,
            children: Vec::new(),
        }
    }

    pub fn attr(mut self, name: &str, value: impl ToString) -> Self {
        self.attrs.insert(name.to_string(), value.to_string());
        self
    }

    pub fn style(mut self, name: &str, value: impl ToString) -> Self {
        self.computed_style.insert(name.to_string(), value.to_string());
        self
    }

    pub fn datum(mut self, datum: Value) -> Self {
        self.datum = Some(datum);
        self
    }

    pub fn bbox(mut self, bbox: BBox) -> Self {
        self.bbox = Some(bbox);
        self
    }

    pub fn text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn child(mut self, child: SceneElement) -> Self {
        self.children.push(child);
        self
    }
}

/// The full snapshot document as it appears on disk (`.scene.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDocument {
    pub version: u32,
    #[serde(default)]
    pub url: String,
    pub viewport: Viewport,
    pub root: SceneElement,
}

/// Handle to an element inside a [`RenderedScene`]; the value is the
/// element's pre-order (document order) index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElementRef(pub usize);

/// Per-node data held in the scene arena.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementData {
    pub tag: String,
    pub attrs: BTreeMap<String, String>,
    pub computed_style: BTreeMap<String, String>,
    pub datum: Option<Value>,
    pub bbox: Option<BBox>,
    pub text: Option<String>,
}

impl ElementData {
    /// Attribute value, falling back to the computed style of the same name.
    pub fn attr_or_style(&self, name: &str) -> Option<&str> {
        self.attrs
            .get(name)
            .or_else(|| self.computed_style.get(name))
            .map(String::as_str)
    }

    /// Computed style value, falling back to the presentation attribute.
    pub fn style_or_attr(&self, name: &str) -> Option<&str> {
        self.computed_style
            .get(name)
            .or_else(|| self.attrs.get(name))
            .map(String::as_str)
    }

    pub fn id(&self) -> Option<&str> {
        self.attrs.get("id").map(String::as_str)
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.attrs
            .get("class")
            .map(|c| c.split_whitespace())
            .into_iter()
            .flatten()
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes().any(|c| c == class)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    data: ElementData,
    parent: Option<ElementRef>,
    children: Vec<ElementRef>,
}

/// Immutable snapshot of a rendered document.
///
/// Elements live in a flat arena in document order, so an [`ElementRef`]
/// ordering is the document ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    pub version: u32,
    pub url: String,
    pub viewport: Viewport,
    nodes: Vec<Node>,
}

impl RenderedScene {
    pub fn from_document(doc: SnapshotDocument) -> Result<Self, SceneError> {
        if !SUPPORTED_VERSIONS.contains(&doc.version) {
            return Err(SceneError::Schema(format!(
                "unsupported snapshot version {} (supported: {:?})",
                doc.version, SUPPORTED_VERSIONS
            )));
        }
        if !CONTAINER_TAGS.contains(&doc.root.tag.to_ascii_lowercase().as_str()) {
            return Err(SceneError::Schema(format!(
                "root element <{}> is not a document or svg container",
                doc.root.tag
            )));
        }
        let mut nodes = Vec::new();
        flatten(doc.root, None, &mut nodes)?;
        Ok(RenderedScene {
            version: doc.version,
            url: doc.url,
            viewport: doc.viewport,
            nodes,
        })
    }

    pub fn to_document(&self) -> SnapshotDocument {
        SnapshotDocument {
            version: self.version,
            url: self.url.clone(),
            viewport: self.viewport,
            root: self.nest(self.root()),
        }
    }

    fn nest(&self, r: ElementRef) -> SceneElement {
        let node = &self.nodes[r.0];
        SceneElement {
            tag: node.data.tag.clone(),
            attrs: node.data.attrs.clone(),
            computed_style: node.data.computed_style.clone(),
            datum: node.data.datum.clone(),
            bbox: node.data.bbox,
            text: node.data.text.clone(),
            children: node.children.iter().map(|&c| self.nest(c)).collect(),
        }
    }

    pub fn root(&self) -> ElementRef {
        ElementRef(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn element(&self, r: ElementRef) -> &ElementData {
        &self.nodes[r.0].data
    }

    pub fn get(&self, r: ElementRef) -> Option<&ElementData> {
        self.nodes.get(r.0).map(|n| &n.data)
    }

    pub fn parent(&self, r: ElementRef) -> Option<ElementRef> {
        self.nodes[r.0].parent
    }

    pub fn children(&self, r: ElementRef) -> &[ElementRef] {
        &self.nodes[r.0].children
    }

    /// Ancestors from the nearest parent outwards.
    pub fn ancestors(&self, r: ElementRef) -> Ancestors<'_> {
        Ancestors {
            scene: self,
            next: self.parent(r),
        }
    }

    /// All elements in document order.
    pub fn refs(&self) -> impl Iterator<Item = ElementRef> {
        (0..self.nodes.len()).map(ElementRef)
    }

    /// Text of the element and all its descendants, concatenated in
    /// document order.
    pub fn text_content(&self, r: ElementRef) -> String {
        let mut out = String::new();
        self.collect_text(r, &mut out);
        out
    }

    fn collect_text(&self, r: ElementRef, out: &mut String) {
        if let Some(t) = &self.nodes[r.0].data.text {
            out.push_str(t);
        }
        for &c in &self.nodes[r.0].children {
            self.collect_text(c, out);
        }
    }

    /// Short human-readable label such as `rect#b1.bar.selected`.
    pub fn describe(&self, r: ElementRef) -> String {
        let data = self.element(r);
        let mut s = data.tag.clone();
        if let Some(id) = data.id() {
            s.push('#');
            s.push_str(id);
        }
        for c in data.classes() {
            s.push('.');
            s.push_str(c);
        }
        s
    }
}

pub struct Ancestors<'a> {
    scene: &'a RenderedScene,
    next: Option<ElementRef>,
}

impl Iterator for Ancestors<'_> {
    type Item = ElementRef;

    fn next(&mut self) -> Option<ElementRef> {
        let cur = self.next?;
        self.next = self.scene.parent(cur);
        Some(cur)
    }
}

fn flatten(
    el: SceneElement,
    parent: Option<ElementRef>,
    nodes: &mut Vec<Node>,
) -> Result<ElementRef, SceneError> {
    if el.tag.is_empty() {
        return Err(SceneError::Schema("element with empty tag".into()));
    }
    if let Some(b) = &el.bbox {
        if !(b.w >= 0.0 && b.h >= 0.0) || !b.x.is_finite() || !b.y.is_finite() {
            return Err(SceneError::Schema(format!(
                "<{}> has an invalid bbox {:?}",
                el.tag, b
            )));
        }
    }
    let me = ElementRef(nodes.len());
    nodes.push(Node {
        data: ElementData {
            tag: el.tag.to_ascii_lowercase(),
            attrs: el.attrs,
            computed_style: el.computed_style,
            datum: el.datum,
            bbox: el.bbox,
            text: el.text,
        },
        parent,
        children: Vec::new(),
    });
    for child in el.children {
        let c = flatten(child, Some(me), nodes)?;
        nodes[me.0].children.push(c);
    }
    Ok(me)
}
