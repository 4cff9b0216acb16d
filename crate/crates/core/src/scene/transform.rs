use std::ops::Mul;

use super::model::{ElementRef, RenderedScene};
use super::SceneError;

/// 2-D affine transform `[a, b, c, d, e, f]` mapping `(x, y)` to
/// `(a·x + c·y + e, b·x + d·y + f)`, the same layout SVG uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform2D {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Default for Transform2D {
    fn default() -> Self {
        Transform2D::IDENTITY
    }
}

impl Transform2D {
    pub const IDENTITY: Transform2D = Transform2D {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        e: 0.0,
        f: 0.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Transform2D { a, b, c, d, e, f }
    }

    pub fn translate(tx: f64, ty: f64) -> Self {
        Transform2D::new(1.0, 0.0, 0.0, 1.0, tx, ty)
    }

    pub fn scale(sx: f64, sy: f64) -> Self {
        Transform2D::new(sx, 0.0, 0.0, sy, 0.0, 0.0)
    }

    /// Rotation by `degrees`, counter-clockwise in a y-up frame (clockwise
    /// on screen), as in SVG.
    pub fn rotate(degrees: f64) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        Transform2D::new(c, s, -s, c, 0.0, 0.0)
    }

    pub fn skew_x(degrees: f64) -> Self {
        Transform2D::new(1.0, 0.0, degrees.to_radians().tan(), 1.0, 0.0, 0.0)
    }

    pub fn skew_y(degrees: f64) -> Self {
        Transform2D::new(1.0, degrees.to_radians().tan(), 0.0, 1.0, 0.0, 0.0)
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn then_inner(&self, inner: &Transform2D) -> Transform2D {
        Transform2D {
            a: self.a * inner.a + self.c * inner.b,
            b: self.b * inner.a + self.d * inner.b,
            c: self.a * inner.c + self.c * inner.d,
            d: self.b * inner.c + self.d * inner.d,
            e: self.a * inner.e + self.c * inner.f + self.e,
            f: self.b * inner.e + self.d * inner.f + self.f,
        }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a * x + self.c * y + self.e,
            self.b * x + self.d * y + self.f,
        )
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d, self.e, self.f]
            .iter()
            .all(|v| v.is_finite())
    }
}

impl Mul for Transform2D {
    type Output = Transform2D;

    /// Matrix product; `outer * inner` applies `inner` first.
    fn mul(self, inner: Transform2D) -> Transform2D {
        self.then_inner(&inner)
    }
}

/// Parses an SVG `transform` attribute into a single matrix.
pub fn parse_transform_list(text: &str) -> Result<Transform2D, SceneError> {
    let err = || SceneError::TransformParse(text.to_string());
    let mut rest = text.trim();
    let mut out = Transform2D::IDENTITY;
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(err)?;
        let name = rest[..open].trim().trim_start_matches(',').trim();
        let close = rest[open..].find(')').ok_or_else(err)? + open;
        let args: Vec<f64> = rest[open + 1..close]
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| err()))
            .collect::<Result<_, _>>()?;
        let t = match (name, args.as_slice()) {
            ("translate", [tx]) => Transform2D::translate(*tx, 0.0),
            ("translate", [tx, ty]) => Transform2D::translate(*tx, *ty),
            ("scale", [s]) => Transform2D::scale(*s, *s),
            ("scale", [sx, sy]) => Transform2D::scale(*sx, *sy),
            ("rotate", [a]) => Transform2D::rotate(*a),
            ("rotate", [a, cx, cy]) => {
                Transform2D::translate(*cx, *cy)
                    * Transform2D::rotate(*a)
                    * Transform2D::translate(-cx, -cy)
            }
            ("skewX", [a]) => Transform2D::skew_x(*a),
            ("skewY", [a]) => Transform2D::skew_y(*a),
            ("matrix", [a, b, c, d, e, f]) => Transform2D::new(*a, *b, *c, *d, *e, *f),
            _ => return Err(err()),
        };
        out = out * t;
        rest = rest[close + 1..].trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    if !out.is_finite() {
        return Err(err());
    }
    Ok(out)
}

/// Composition of every `transform` attribute from the root down to and
/// including `r`; the outermost transform is applied last.
pub fn effective_transform(
    scene: &RenderedScene,
    r: ElementRef,
) -> Result<Transform2D, SceneError> {
    let mut chain: Vec<ElementRef> = scene.ancestors(r).collect();
    chain.reverse();
    chain.push(r);
    let mut m = Transform2D::IDENTITY;
    for el in chain {
        if let Some(t) = scene.element(el).attrs.get("transform") {
            m = m * parse_transform_list(t)?;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::super::{RenderedScene, SceneElement, SnapshotDocument, Viewport};
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
    }

    fn close_m(x: &Transform2D, y: &Transform2D) -> bool {
        close(x.a, y.a)
            && close(x.b, y.b)
            && close(x.c, y.c)
            && close(x.d, y.d)
            && close(x.e, y.e)
            && close(x.f, y.f)
    }

    fn nested(outer: &str, inner: &str) -> RenderedScene {
        let root = SceneElement::new("svg").child(
            SceneElement::new("g")
                .attr("transform", outer)
                .child(SceneElement::new("rect").attr("transform", inner)),
        );
        RenderedScene::from_document(SnapshotDocument {
            version: 1,
            url: String::new(),
            viewport: Viewport { width: 1, height: 1 },
            root,
        })
        .unwrap()
    }

    #[test]
    fn nested_translations_add() {
        let s = nested("translate(5,5)", "translate(10,20)");
        let m = effective_transform(&s, ElementRef(2)).unwrap();
        assert_eq!((m.e, m.f), (15.0, 25.0));
        assert_eq!((m.a, m.b, m.c, m.d), (1.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn rotate_quarter_turn() {
        let (x, y) = parse_transform_list("rotate(90)").unwrap().apply(1.0, 0.0);
        assert!(x.abs() < 1e-9 && (y - 1.0).abs() < 1e-9, "({x},{y})");
    }

    #[test]
    fn rotate_about_center() {
        let (x, y) = parse_transform_list("rotate(180, 5, 5)").unwrap().apply(0.0, 0.0);
        assert!((x - 10.0).abs() < 1e-9 && (y - 10.0).abs() < 1e-9);
    }

    #[test]
    fn no_transforms_is_identity() {
        let root = SceneElement::new("svg").child(SceneElement::new("rect"));
        let s = RenderedScene::from_document(SnapshotDocument {
            version: 1,
            url: String::new(),
            viewport: Viewport { width: 1, height: 1 },
            root,
        })
        .unwrap();
        assert_eq!(effective_transform(&s, ElementRef(1)).unwrap(), Transform2D::IDENTITY);
    }

    #[test]
    fn list_order_applies_rightmost_first() {
        let m = parse_transform_list("translate(10 0) scale(2)").unwrap();
        assert_eq!(m.apply(1.0, 1.0), (12.0, 2.0));
        let m = parse_transform_list("scale(2),translate(10,0)").unwrap();
        assert_eq!(m.apply(1.0, 1.0), (22.0, 2.0));
    }

    #[test]
    fn malformed_transforms() {
        for bad in ["translate(1,2", "wobble(3)", "scale(a)", "matrix(1,2,3)", "translate(1,2,3)"] {
            assert!(parse_transform_list(bad).is_err(), "{bad}");
        }
        let s = nested("translate(oops)", "scale(1)");
        assert!(matches!(
            effective_transform(&s, ElementRef(2)),
            Err(SceneError::TransformParse(_))
        ));
    }

    fn arb_matrix() -> impl Strategy<Value = Transform2D> {
        prop::array::uniform6(-10.0f64..10.0)
            .prop_map(|[a, b, c, d, e, f]| Transform2D::new(a, b, c, d, e, f))
    }

    proptest! {
        #[test]
        fn composition_is_associative(x in arb_matrix(), y in arb_matrix(), z in arb_matrix()) {
            prop_assert!(close_m(&((x * y) * z), &(x * (y * z))));
        }

        #[test]
        fn identity_is_neutral(x in arb_matrix()) {
            prop_assert!(close_m(&(Transform2D::IDENTITY * x), &x));
            prop_assert!(close_m(&(x * Transform2D::IDENTITY), &x));
        }

        #[test]
        fn product_applies_inner_first(x in arb_matrix(), y in arb_matrix(),
                                       px in -100.0f64..100.0, py in -100.0f64..100.0) {
            let (ix, iy) = y.apply(px, py);
            let (ox, oy) = x.apply(ix, iy);
            let (cx, cy) = (x * y).apply(px, py);
            prop_assert!((ox - cx).abs() < 1e-7 && (oy - cy).abs() < 1e-7);
        }
    }
}
