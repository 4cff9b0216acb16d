use super::model::{BBox, ElementData, ElementRef, RenderedScene};
use super::transform::effective_transform;
use super::SceneError;

fn num(el: &ElementData, name: &str) -> Option<f64> {
    el.attrs.get(name).and_then(|v| parse_length(v))
}

/// Parses a plain number or a `px` length.
pub fn parse_length(v: &str) -> Option<f64> {
    let v = v.trim();
    let v = v.strip_suffix("px").unwrap_or(v).trim_end();
    v.parse::<f64>().ok().filter(|n| n.is_finite())
}

/// Bounding box of the element's own geometry attributes, in its local
/// user space (before any transform).
pub fn local_geometry(el: &ElementData) -> Option<BBox> {
    match el.tag.as_str() {
        "rect" | "image" | "foreignobject" | "use" | "svg" => {
            let w = num(el, "width")?;
            let h = num(el, "height")?;
            Some(BBox::new(
                num(el, "x").unwrap_or(0.0),
                num(el, "y").unwrap_or(0.0),
                w.max(0.0),
                h.max(0.0),
            ))
        }
        "circle" => {
            let r = num(el, "r")?.max(0.0);
            let cx = num(el, "cx").unwrap_or(0.0);
            let cy = num(el, "cy").unwrap_or(0.0);
            Some(BBox::new(cx - r, cy - r, 2.0 * r, 2.0 * r))
        }
        "ellipse" => {
            let rx = num(el, "rx")?.max(0.0);
            let ry = num(el, "ry")?.max(0.0);
            let cx = num(el, "cx").unwrap_or(0.0);
            let cy = num(el, "cy").unwrap_or(0.0);
            Some(BBox::new(cx - rx, cy - ry, 2.0 * rx, 2.0 * ry))
        }
        "line" => {
            let x1 = num(el, "x1").unwrap_or(0.0);
            let y1 = num(el, "y1").unwrap_or(0.0);
            let x2 = num(el, "x2").unwrap_or(0.0);
            let y2 = num(el, "y2").unwrap_or(0.0);
            if !["x1", "y1", "x2", "y2"].iter().any(|k| el.attrs.contains_key(*k)) {
                return None;
            }
            Some(BBox::new(
                x1.min(x2),
                y1.min(y2),
                (x2 - x1).abs(),
                (y2 - y1).abs(),
            ))
        }
        _ => None,
    }
}

/// Absolute box in root coordinates. A probe-reported bbox wins; otherwise
/// the local geometry is mapped through the effective transform and the
/// axis-aligned hull of its corners is returned.
pub fn absolute_geometry(scene: &RenderedScene, r: ElementRef) -> Result<BBox, SceneError> {
    let el = scene.element(r);
    if let Some(b) = el.bbox {
        return Ok(b);
    }
    let local = local_geometry(el).ok_or_else(|| SceneError::NoGeometry(scene.describe(r)))?;
    let m = effective_transform(scene, r)?;
    let corners = [
        m.apply(local.x, local.y),
        m.apply(local.x + local.w, local.y),
        m.apply(local.x, local.y + local.h),
        m.apply(local.x + local.w, local.y + local.h),
    ];
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, y) in corners {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    Ok(BBox::new(x0, y0, x1 - x0, y1 - y0))
}

#[cfg(test)]
mod tests {
    use super::super::{RenderedScene, SceneElement, SnapshotDocument, Viewport};
    use super::*;

    fn scene_with(child: SceneElement) -> RenderedScene {
        RenderedScene::from_document(SnapshotDocument {
            version: 1,
            url: String::new(),
            viewport: Viewport { width: 100, height: 100 },
            root: SceneElement::new("svg").child(child),
        })
        .unwrap()
    }

    #[test]
    fn rect_under_translate() {
        let s = scene_with(
            SceneElement::new("g").attr("transform", "translate(100,50)").child(
                SceneElement::new("rect")
                    .attr("x", 0)
                    .attr("y", 0)
                    .attr("width", 10)
                    .attr("height", 10),
            ),
        );
        assert_eq!(
            absolute_geometry(&s, ElementRef(2)).unwrap(),
            BBox::new(100.0, 50.0, 10.0, 10.0)
        );
    }

    #[test]
    fn circle_box() {
        let s = scene_with(SceneElement::new("circle").attr("cx", 5).attr("cy", 5).attr("r", 2));
        assert_eq!(absolute_geometry(&s, ElementRef(1)).unwrap(), BBox::new(3.0, 3.0, 4.0, 4.0));
    }

    #[test]
    fn line_box_is_normalized() {
        let s = scene_with(
            SceneElement::new("line").attr("x1", 10).attr("y1", 0).attr("x2", 0).attr("y2", 4),
        );
        assert_eq!(absolute_geometry(&s, ElementRef(1)).unwrap(), BBox::new(0.0, 0.0, 10.0, 4.0));
    }

    #[test]
    fn text_without_bbox_has_no_geometry() {
        let s = scene_with(SceneElement::new("text").attr("x", 3).text("hi"));
        assert!(matches!(absolute_geometry(&s, ElementRef(1)), Err(SceneError::NoGeometry(_))));
    }

    #[test]
    fn probe_bbox_wins() {
        let s = scene_with(
            SceneElement::new("rect")
                .attr("width", 10)
                .attr("height", 10)
                .bbox(BBox::new(1.0, 2.0, 3.0, 4.0)),
        );
        assert_eq!(absolute_geometry(&s, ElementRef(1)).unwrap(), BBox::new(1.0, 2.0, 3.0, 4.0));
    }

    #[test]
    fn scaled_and_rotated_rect() {
        let s = scene_with(
            SceneElement::new("g").attr("transform", "rotate(90) scale(2)").child(
                SceneElement::new("rect").attr("width", 10).attr("height", 5),
            ),
        );
        let b = absolute_geometry(&s, ElementRef(2)).unwrap();
        assert!((b.x + 10.0).abs() < 1e-9 && b.y.abs() < 1e-9);
        assert!((b.w - 10.0).abs() < 1e-9 && (b.h - 20.0).abs() < 1e-9);
    }

    #[test]
    fn px_lengths() {
        assert_eq!(parse_length("12px"), Some(12.0));
        assert_eq!(parse_length(" 3.5 "), Some(3.5));
        assert_eq!(parse_length("50%"), None);
    }
}
