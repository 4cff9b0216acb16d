use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::scene::{ElementRef, RenderedScene};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttrChange {
    /// Element in the `after` scene.
    pub element: ElementRef,
    /// Attribute name, `style:<property>` for computed style, or `#text`.
    pub attr: String,
    pub old: Option<String>,
    pub new: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SceneDiff {
    /// Elements (refs into `after`) that became visible.
    pub appeared: Vec<ElementRef>,
    /// Elements (refs into `before`) that stopped being visible.
    pub disappeared: Vec<ElementRef>,
    pub changed: Vec<AttrChange>,
}

impl SceneDiff {
    pub fn is_empty(&self) -> bool {
        self.appeared.is_empty() && self.disappeared.is_empty() && self.changed.is_empty()
    }

    /// One-line summary for feedback.
    pub fn summary(&self, before: &RenderedScene, after: &RenderedScene) -> String {
        if self.is_empty() {
            return "no visible change".into();
        }
        let list = |scene: &RenderedScene, refs: &[ElementRef]| {
            refs.iter().map(|&r| scene.describe(r)).collect::<Vec<_>>().join(", ")
        };
        let mut parts = Vec::new();
        if !self.appeared.is_empty() {
            parts.push(format!("appeared: {}", list(after, &self.appeared)));
        }
        if !self.disappeared.is_empty() {
            parts.push(format!("disappeared: {}", list(before, &self.disappeared)));
        }
        if !self.changed.is_empty() {
            let elements: BTreeSet<ElementRef> = self.changed.iter().map(|c| c.element).collect();
            parts.push(format!(
                "{} attribute change(s) on {} element(s)",
                self.changed.len(),
                elements.len()
            ));
        }
        parts.join("; ")
    }
}

fn signature(scene: &RenderedScene, r: ElementRef) -> String {
    let el = scene.element(r);
    let mut s = el.tag.clone();
    if let Some(id) = el.id() {
        s.push('#');
        s.push_str(id);
    }
    let classes: BTreeSet<&str> = el.classes().collect();
    for c in classes {
        s.push('.');
        s.push_str(c);
    }
    s
}

/// Structural key used to pair elements across scenes: the path from the
/// root, each step being `tag#id.classes` plus the ordinal among siblings
/// with the same signature.
pub fn element_key(scene: &RenderedScene, r: ElementRef) -> String {
    let mut chain: Vec<ElementRef> = scene.ancestors(r).collect();
    chain.reverse();
    chain.push(r);
    let mut out = String::new();
    for (i, &node) in chain.iter().enumerate() {
        let sig = signature(scene, node);
        let ordinal = if i == 0 {
            0
        } else {
            scene
                .children(chain[i - 1])
                .iter()
                .take_while(|&&c| c != node)
                .filter(|&&c| signature(scene, c) == sig)
                .count()
        };
        if i > 0 {
            out.push('/');
        }
        out.push_str(&sig);
        out.push('[');
        out.push_str(&ordinal.to_string());
        out.push(']');
    }
    out
}

fn hidden_self(scene: &RenderedScene, r: ElementRef) -> bool {
    let el = scene.element(r);
    if el.style_or_attr("display").map(str::trim) == Some("none") {
        return true;
    }
    matches!(
        el.style_or_attr("opacity").map(str::trim).and_then(|o| o.parse::<f64>().ok()),
        Some(o) if o <= 0.0
    )
}

/// Whether the element would be seen: not `display: none` or fully
/// transparent itself or through an ancestor, and not `visibility: hidden`.
pub fn is_visible(scene: &RenderedScene, r: ElementRef) -> bool {
    let vis = scene.element(r).style_or_attr("visibility").map(str::trim);
    if matches!(vis, Some("hidden") | Some("collapse")) {
        return false;
    }
    !std::iter::once(r)
        .chain(scene.ancestors(r))
        .any(|a| hidden_self(scene, a))
}

fn index(scene: &RenderedScene) -> BTreeMap<String, ElementRef> {
    scene.refs().map(|r| (element_key(scene, r), r)).collect()
}

/// Compares two captures of the same page.
pub fn diff_scenes(before: &RenderedScene, after: &RenderedScene) -> SceneDiff {
    let old = index(before);
    let new = index(after);
    let mut diff = SceneDiff::default();
    for (key, &r) in &new {
        let was_visible = old.get(key).is_some_and(|&o| is_visible(before, o));
        if is_visible(after, r) && !was_visible {
            diff.appeared.push(r);
        }
    }
    for (key, &r) in &old {
        let still_visible = new.get(key).is_some_and(|&n| is_visible(after, n));
        if is_visible(before, r) && !still_visible {
            diff.disappeared.push(r);
        }
    }
    for (key, &n) in &new {
        let Some(&o) = old.get(key) else { continue };
        let (a, b) = (before.element(o), after.element(n));
        let mut changes = Vec::new();
        let names: BTreeSet<&String> = a.attrs.keys().chain(b.attrs.keys()).collect();
        for name in names {
            let (x, y) = (a.attrs.get(name), b.attrs.get(name));
            if x != y {
                changes.push((name.clone(), x.cloned(), y.cloned()));
            }
        }
        let names: BTreeSet<&String> = a.computed_style.keys().chain(b.computed_style.keys()).collect();
        for name in names {
            let (x, y) = (a.computed_style.get(name), b.computed_style.get(name));
            if x != y {
                changes.push((format!("style:{name}"), x.cloned(), y.cloned()));
            }
        }
        if a.text != b.text {
            changes.push(("#text".into(), a.text.clone(), b.text.clone()));
        }
        diff.changed.extend(changes.into_iter().map(|(attr, old, new)| AttrChange {
            element: n,
            attr,
            old,
            new,
        }));
    }
    diff.appeared.sort();
    diff.disappeared.sort();
    diff.changed.sort_by(|x, y| x.element.cmp(&y.element).then_with(|| x.attr.cmp(&y.attr)));
    diff
}
