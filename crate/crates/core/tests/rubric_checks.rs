use std::collections::BTreeMap;

use proptest::prelude::*;
use serde_json::{json, Value};
use vizgrade::rubric::{
    load_rubric, resolve_parameters, resolve_parameters_strict, run_check, run_checks, CheckContext, CheckResult,
    Rubric, RubricError,
};
use vizgrade::rubric::expr::ExprValue;
use vizgrade::scene::{RenderedScene, SceneElement, SnapshotDocument, Viewport};

fn scene(root: SceneElement) -> RenderedScene {
    RenderedScene::from_document(SnapshotDocument {
        version: 1,
        url: String::new(),
        viewport: Viewport { width: 800, height: 600 },
        root,
    })
    .unwrap()
}

fn rubric(parameters: Value, checks: Value) -> Rubric {
    let max: f64 = checks.as_array().unwrap().iter().map(|c| c["points"].as_f64().unwrap()).sum();
    let doc = json!({
        "version": 1,
        "parameters": parameters,
        "checks": checks,
        "scoring": {"mode": "additive", "max_points": max},
    });
    load_rubric(&serde_json::to_vec(&doc).unwrap()).unwrap()
}

fn run(r: &Rubric, s: &RenderedScene, dataset: &[Value]) -> Vec<CheckResult> {
    let env = resolve_parameters(r, s, dataset);
    let none = BTreeMap::new();
    let ctx = CheckContext {
        scene: s,
        dataset,
        env: &env,
        tolerances: r.tolerances.clone(),
        inference: r.inference.clone(),
        interactions: &none,
    };
    run_checks(&r.checks, &ctx)
}

fn bars(heights: &[(&str, f64)]) -> RenderedScene {
    let mut g = SceneElement::new("g").attr("id", "bars");
    for (i, (name, h)) in heights.iter().enumerate() {
        g = g.child(
            SceneElement::new("rect")
                .attr("x", 10 + 30 * i)
                .attr("y", 300.0 - h)
                .attr("width", 20)
                .attr("height", h)
                .datum(json!({"name": name, "v": h / 3.0})),
        );
    }
    scene(SceneElement::new("svg").attr("width", 800).child(g))
}

#[test]
fn attr_match_within_geometry_tolerance() {
    let s = scene(SceneElement::new("svg").child(SceneElement::new("rect").attr("x", "100.4")));
    let r = rubric(
        json!([]),
        json!([{"id": "x", "type": "attr_match", "points": 1, "anchor": "rect",
                "args": {"attr": "x", "expected": 100.0, "tolerance": 1.0}}]),
    );
    assert!(run(&r, &s, &[])[0].passed);
    let s = scene(SceneElement::new("svg").child(SceneElement::new("rect").attr("x", "101.5")));
    assert!(!run(&r, &s, &[])[0].passed);
}

#[test]
fn scale_kind_feedback_names_both_kinds() {
    // rank heights: 10,20,30 for values 1,50,7 is neither linear nor log
    let s = bars(&[("a", 10.0), ("b", 30.0), ("c", 20.0)]);
    let data = vec![json!({"name": "a", "v": 1}), json!({"name": "b", "v": 50}), json!({"name": "c", "v": 7})];
    let r = rubric(
        json!([]),
        json!([{"id": "s", "type": "scale_kind", "points": 2, "anchor": "#bars rect",
                "args": {"field": "v", "channel": "height", "expected": "linear", "key": "name"}}]),
    );
    let res = &run(&r, &s, &data)[0];
    assert!(!res.passed);
    assert!(res.feedback.contains("linear") && res.feedback.contains("ordinal"), "{}", res.feedback);
}

#[test]
fn named_color_equals_rgb() {
    let s = scene(SceneElement::new("svg").child(SceneElement::new("rect").attr("fill", "rgb(70,130,180)")));
    let r = rubric(
        json!([]),
        json!([{"id": "c", "type": "color_match", "points": 1, "anchor": "rect",
                "args": {"expected": "steelblue", "tolerance": 0}}]),
    );
    assert!(run(&r, &s, &[])[0].passed);
    let s = scene(SceneElement::new("svg").child(SceneElement::new("rect").attr("fill", "rgb(70,130,181)")));
    assert!(!run(&r, &s, &[])[0].passed);
}

#[test]
fn parameters_resolve_from_scene() {
    let s = scene(SceneElement::new("svg").attr("width", 800));
    let r = rubric(
        json!([
            {"name": "width", "selector": "svg", "attr": "width"},
            {"name": "inner_w", "expr": "width - 40"},
            {"name": "legend_color", "selector": "#legend", "style": "fill"}
        ]),
        json!([{"id": "w", "type": "attr_expr", "points": 1, "anchor": "svg",
                "args": {"attr": "width", "expected": "inner_w + 40"}},
               {"id": "l", "type": "color_match", "points": 1, "anchor": "svg",
                "args": {"expected_expr": "legend_color"}}]),
    );
    let env = resolve_parameters(&r, &s, &[]);
    assert_eq!(env.get("width"), Some(&ExprValue::Number(800.0)));
    assert_eq!(env.get("inner_w"), Some(&ExprValue::Number(760.0)));
    assert!(env.unresolved_reason("legend_color").unwrap().contains("#legend"));
    assert_eq!(
        resolve_parameters_strict(&r, &s, &[]).unwrap_err(),
        RubricError::ParameterUnresolvable("legend_color".into())
    );
    let res = run(&r, &s, &[]);
    assert!(res[0].passed, "{}", res[0].feedback);
    assert!(!res[1].passed);
    assert!(res[1].feedback.contains("legend_color"), "{}", res[1].feedback);
}

#[test]
fn feedback_template_interpolates() {
    let s = scene(SceneElement::new("svg").child(SceneElement::new("rect").attr("x", "7")));
    let r = rubric(
        json!([]),
        json!([{"id": "x", "type": "attr_match", "points": 1, "anchor": "rect",
                "args": {"attr": "x", "expected": 3},
                "feedback_fail": "expected {expected} got {observed}"}]),
    );
    let res = &run(&r, &s, &[])[0];
    assert!(!res.passed);
    assert!(res.feedback.contains('3') && res.feedback.contains('7'), "{}", res.feedback);
    assert!(res.feedback.starts_with("expected "), "{}", res.feedback);
}

#[test]
fn missing_anchor_guides() {
    let s = scene(SceneElement::new("svg"));
    let r = rubric(json!([]), json!([{"id": "a", "type": "anchor_exists", "points": 1, "anchor": "rect.bar"}]));
    let res = &run(&r, &s, &[])[0];
    assert!(!res.passed);
    assert!(res.feedback.contains("rect.bar"), "{}", res.feedback);
}

fn arb_element(depth: u32) -> BoxedStrategy<SceneElement> {
    let tags = prop::sample::select(vec!["g", "rect", "circle", "text", "path", "line"]);
    let attr_vals = prop::sample::select(vec!["0", "12.5", "-3", "NaN", "", "red", "rgb(1,2,3)", "bar", "x y", "1e309"]);
    let leaf = (tags, prop::collection::vec((prop::sample::select(vec!["x", "y", "width", "height", "fill", "class", "id", "transform"]), attr_vals), 0..5), any::<Option<i32>>())
        .prop_map(|(tag, attrs, datum)| {
            let mut e = SceneElement::new(tag);
            for (k, v) in attrs {
                e = e.attr(k, v);
            }
            if let Some(d) = datum {
                e = e.datum(json!({"name": d.to_string(), "value": d}));
            }
            e
        });
    if depth == 0 {
        return leaf.boxed();
    }
    (leaf, prop::collection::vec(arb_element(depth - 1), 0..4))
        .prop_map(|(mut e, kids)| {
            for k in kids {
                e = e.child(k);
            }
            e
        })
        .boxed()
}

proptest! {
    #[test]
    fn checks_never_panic(kids in prop::collection::vec(arb_element(2), 0..5)) {
        let mut root = SceneElement::new("svg").attr("width", 600);
        for k in kids {
            root = root.child(k);
        }
        let s = scene(root);
        let r = vizgrade::rubric::load_rubric_file(
            &std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart/rubric.json"),
        ).unwrap();
        let data = r.load_dataset().unwrap();
        let env = resolve_parameters(&r, &s, &data);
        let none = BTreeMap::new();
        let ctx = CheckContext {
            scene: &s, dataset: &data, env: &env,
            tolerances: r.tolerances.clone(), inference: r.inference.clone(), interactions: &none,
        };
        for c in &r.checks {
            let res = run_check(c, &ctx);
            prop_assert!(res.points_awarded == 0.0 || res.points_awarded == res.points_possible);
            prop_assert!(res.passed || !res.feedback.is_empty());
        }
    }
}
