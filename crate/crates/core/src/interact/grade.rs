use regex::Regex;
use serde_json::Value;

use super::{compile_gesture, diff_scenes, is_visible, resolve_target, Expectation, InteractionSpec, ScenePlayer, SceneDiff};
use crate::rubric::expr::{eval_expression, ExprValue, Scope};
use crate::rubric::CheckResult;
use crate::scene::{self, RenderedScene};

fn describe(e: &Expectation) -> String {
    match e {
        Expectation::ElementAppears { selector } => format!("{selector} appears"),
        Expectation::ElementDisappears { selector } => format!("{selector} disappears"),
        Expectation::TextMatches {
            selector,
            expected,
            pattern,
            expr,
        } => match (expected, pattern, expr) {
            (Some(t), _, _) => format!("{selector} reads {t:?}"),
            (_, Some(p), _) => format!("{selector} matches /{p}/"),
            (_, _, Some(x)) => format!("{selector} reads {x}"),
            _ => format!("{selector} has text"),
        },
        Expectation::AttrChanged { selector, attr } => format!("{attr} of {selector} changes"),
    }
}

struct Evidence<'a> {
    pre: &'a RenderedScene,
    post: &'a RenderedScene,
    diff: &'a SceneDiff,
    datum: Option<&'a Value>,
    scope: &'a Scope<'a>,
}

fn check(e: &Expectation, ev: &Evidence<'_>) -> Result<(), String> {
    let query = |s: &RenderedScene, sel: &str| scene::query(s, sel).map_err(|err| err.to_string());
    match e {
        Expectation::ElementAppears { selector } => {
            let refs = query(ev.post, selector)?;
            if refs.iter().any(|r| ev.diff.appeared.contains(r)) {
                Ok(())
            } else if refs.is_empty() {
                Err(format!("no element matches {selector} after the interaction"))
            } else {
                Err(format!("{selector} did not become visible"))
            }
        }
        Expectation::ElementDisappears { selector } => {
            let refs = query(ev.pre, selector)?;
            if refs.iter().any(|r| ev.diff.disappeared.contains(r)) {
                Ok(())
            } else {
                Err(format!("{selector} did not disappear"))
            }
        }
        Expectation::TextMatches {
            selector,
            expected,
            pattern,
            expr,
        } => {
            let visible: Vec<_> = query(ev.post, selector)?
                .into_iter()
                .filter(|&r| is_visible(ev.post, r))
                .collect();
            if visible.is_empty() {
                return Err(format!("no visible element matches {selector}"));
            }
            let texts: Vec<String> = visible
                .iter()
                .map(|&r| ev.post.text_content(r).trim().to_string())
                .collect();
            let ok = if let Some(p) = pattern {
                let re = Regex::new(p).map_err(|err| err.to_string())?;
                texts.iter().any(|t| re.is_match(t))
            } else {
                let want = match (expected, expr) {
                    (Some(t), _) => t.trim().to_string(),
                    (None, Some(x)) => {
                        let mut scope = ev.scope.child();
                        if let Some(d) = ev.datum {
                            scope.set("datum", ExprValue::from_json(d));
                        }
                        eval_expression(x, &scope)
                            .map_err(|err| format!("cannot evaluate {x}: {err}"))?
                            .to_string()
                    }
                    _ => return Err("text_matches has nothing to compare against".into()),
                };
                if texts.iter().any(|t| *t == want) {
                    true
                } else {
                    return Err(format!("text of {selector} is {:?}, expected {want:?}", texts[0]));
                }
            };
            if ok {
                Ok(())
            } else {
                Err(format!("text of {selector} is {:?}, which does not match", texts[0]))
            }
        }
        Expectation::AttrChanged { selector, attr } => {
            let refs = query(ev.post, selector)?;
            let style = format!("style:{attr}");
            if ev
                .diff
                .changed
                .iter()
                .any(|c| refs.contains(&c.element) && (c.attr == *attr || c.attr == style))
            {
                Ok(())
            } else {
                Err(format!("{attr} of {selector} did not change"))
            }
        }
    }
}

/// Runs the interaction on `player` and grades the outcome. Never fails:
/// problems become a failing result with diagnostic feedback. The result
/// carries no points; the owning check assigns them.
///
/// The player is captured before each gesture and once after settling,
/// so a recording for `n` gestures holds `n + 1` scenes.
pub fn grade_interaction(spec: &InteractionSpec, player: &mut dyn ScenePlayer, scope: &Scope<'_>) -> CheckResult {
    let expected = spec.expect.iter().map(describe).collect::<Vec<_>>().join("; ");
    let fail = |observed: String, feedback: String| CheckResult {
        id: spec.id.clone(),
        passed: false,
        points_awarded: 0.0,
        points_possible: 0.0,
        observed,
        expected: expected.clone(),
        feedback,
    };
    if let Err(e) = spec.validate() {
        return fail(String::new(), e);
    }
    let pre = match player.capture() {
        Ok(s) => s,
        Err(e) => return fail(String::new(), format!("could not capture the page before interacting: {e}")),
    };
    let mut datum: Option<Value> = None;
    for (i, g) in spec.gestures.iter().enumerate() {
        let current = if i == 0 {
            pre.clone()
        } else {
            match player.capture() {
                Ok(s) => s,
                Err(e) => return fail(String::new(), format!("could not capture the page before gesture {}: {e}", i + 1)),
            }
        };
        let seq = match compile_gesture(g, &current) {
            Ok(s) => s,
            Err(e) => return fail(String::new(), format!("gesture {} ({:?}) cannot be performed: {e}", i + 1, g.kind)),
        };
        if let Some(t) = &g.target {
            if let Ok((_, Some(r))) = resolve_target(&current, t) {
                if let Some(d) = &current.element(r).datum {
                    datum = Some(d.clone());
                }
            }
        }
        if let Err(e) = player.act(&seq) {
            return fail(String::new(), format!("gesture {} failed: {e}", i + 1));
        }
    }
    player.settle(spec.settle);
    let post = match player.capture() {
        Ok(s) => s,
        Err(e) => return fail(String::new(), format!("could not capture the page after interacting: {e}")),
    };
    let diff = diff_scenes(&pre, &post);
    let summary = diff.summary(&pre, &post);
    let ev = Evidence {
        pre: &pre,
        post: &post,
        diff: &diff,
        datum: datum.as_ref(),
        scope,
    };
    let problems: Vec<String> = spec.expect.iter().filter_map(|e| check(e, &ev).err()).collect();
    if problems.is_empty() {
        CheckResult {
            id: spec.id.clone(),
            passed: true,
            points_awarded: 0.0,
            points_possible: 0.0,
            observed: summary,
            expected,
            feedback: String::new(),
        }
    } else {
        let feedback = format!("{} (observed change: {summary})", problems.join("; "));
        fail(summary, feedback)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interact::{Gesture, ScriptedPlayer, Target};
    use crate::scene::{BBox, SceneElement, SnapshotDocument, Viewport};
    use serde_json::json;

    fn page(tip_opacity: &str, tip_text: &str) -> RenderedScene {
        let bar = SceneElement::new("rect")
            .attr("class", "bar")
            .datum(json!({"name": "A", "value": 42}))
            .bbox(BBox::new(10.0, 10.0, 20.0, 50.0));
        let mut tip = SceneElement::new("div").attr("class", "tooltip").style("opacity", tip_opacity);
        if !tip_text.is_empty() {
            tip = tip.text(tip_text);
        }
        let root = SceneElement::new("body").child(SceneElement::new("svg").child(bar)).child(tip);
        RenderedScene::from_document(SnapshotDocument {
            version: 1,
            url: String::new(),
            viewport: Viewport {
                width: 100,
                height: 100,
            },
            root,
        })
        .unwrap()
    }

    fn spec(expect: Vec<Expectation>) -> InteractionSpec {
        InteractionSpec {
            id: "hover_tooltip".into(),
            gestures: vec![Gesture::hover(".bar")],
            expect,
            settle: 0,
        }
    }

    #[test]
    fn tooltip_with_literal_text() {
        let mut player = ScriptedPlayer::new(vec![page("0", ""), page("0.9", "value: 42")]);
        let s = spec(vec![Expectation::TextMatches {
            selector: ".tooltip".into(),
            expected: Some("value: 42".into()),
            pattern: None,
            expr: None,
        }]);
        let r = grade_interaction(&s, &mut player, &Scope::new(&[]));
        assert!(r.passed, "{}", r.feedback);
        assert_eq!(player.acted().len(), 1);
        let hover = &player.acted()[0].sources[0].actions[0];
        assert!(matches!(hover, crate::wire::Action::PointerMove { x: 20, y: 35, .. }));
    }

    #[test]
    fn no_change_fails_with_empty_diff() {
        let mut player = ScriptedPlayer::new(vec![page("0", ""), page("0", "")]);
        let s = spec(vec![Expectation::ElementAppears {
            selector: ".tooltip".into(),
        }]);
        let r = grade_interaction(&s, &mut player, &Scope::new(&[]));
        assert!(!r.passed);
        assert!(r.feedback.contains("no visible change"), "{}", r.feedback);
    }

    #[test]
    fn expression_over_hovered_datum() {
        let mut player = ScriptedPlayer::new(vec![page("0", ""), page("1", "value: 42")]);
        let s = spec(vec![
            Expectation::ElementAppears {
                selector: ".tooltip".into(),
            },
            Expectation::TextMatches {
                selector: ".tooltip".into(),
                expected: None,
                pattern: None,
                expr: Some("\"value: \" + datum.value".into()),
            },
        ]);
        let r = grade_interaction(&s, &mut player, &Scope::new(&[]));
        assert!(r.passed, "{}", r.feedback);

        let mut player = ScriptedPlayer::new(vec![page("0", ""), page("1", "value: 17")]);
        let r = grade_interaction(&s, &mut player, &Scope::new(&[]));
        assert!(!r.passed);
        assert!(r.feedback.contains("\"value: 42\""), "{}", r.feedback);
    }

    #[test]
    fn deterministic_and_recording_untouched() {
        let rec = vec![page("0", ""), page("1", "value: 42")];
        let s = spec(vec![Expectation::AttrChanged {
            selector: ".tooltip".into(),
            attr: "opacity".into(),
        }]);
        let mut p1 = ScriptedPlayer::new(rec.clone());
        let mut p2 = ScriptedPlayer::new(rec.clone());
        let a = grade_interaction(&s, &mut p1, &Scope::new(&[]));
        let b = grade_interaction(&s, &mut p2, &Scope::new(&[]));
        assert_eq!(a, b);
        assert!(a.passed);
        assert_eq!(p1.recording(), rec.as_slice());
    }

    #[test]
    fn missing_target_is_feedback() {
        let mut player = ScriptedPlayer::new(vec![page("0", "")]);
        let mut s = spec(vec![Expectation::ElementAppears {
            selector: ".tooltip".into(),
        }]);
        s.gestures = vec![Gesture::new(
            crate::interact::GestureKind::Hover,
            Some(Target::Selector(".nope".into())),
        )];
        let r = grade_interaction(&s, &mut player, &Scope::new(&[]));
        assert!(!r.passed);
        assert!(r.feedback.contains(".nope"));
    }
}
