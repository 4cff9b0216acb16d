use super::{Gesture, GestureKind, InteractError, Target, DEFAULT_DRAG_MS, DEFAULT_DWELL_MS};
use crate::scene::{self, absolute_geometry, ElementRef, RenderedScene};
use crate::wire::{Action, ActionSequence, InputSource, Origin};

/// WebDriver code points for the named keys rubrics may use.
const NAMED_KEYS: &[(&str, char)] = &[
    ("ArrowDown", '\u{E015}'),
    ("ArrowLeft", '\u{E012}'),
    ("ArrowRight", '\u{E014}'),
    ("ArrowUp", '\u{E013}'),
    ("Backspace", '\u{E003}'),
    ("Delete", '\u{E017}'),
    ("Enter", '\u{E007}'),
    ("Escape", '\u{E00C}'),
    ("Space", ' '),
    ("Tab", '\u{E004}'),
];

pub(super) fn key_char(name: &str) -> Result<char, InteractError> {
    let mut chars = name.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        return Ok(c);
    }
    NAMED_KEYS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| *c)
        .ok_or_else(|| InteractError::InvalidGesture(format!("unknown key {name:?}")))
}

/// Viewport point for a target, plus the element it resolved to.
pub fn resolve_target(
    scene: &RenderedScene,
    target: &Target,
) -> Result<((f64, f64), Option<ElementRef>), InteractError> {
    let (selector, index) = match target {
        Target::Point { x, y } => return Ok(((*x, *y), None)),
        other => other.selector().expect("selector target"),
    };
    let refs = scene::query(scene, selector)?;
    let r = *refs
        .get(index)
        .ok_or_else(|| InteractError::TargetNotFound(describe(selector, index)))?;
    let bbox = absolute_geometry(scene, r).map_err(|e| match e {
        scene::SceneError::NoGeometry(_) => InteractError::NoGeometry(describe(selector, index)),
        other => InteractError::Scene(other),
    })?;
    Ok((bbox.center(), Some(r)))
}

fn describe(selector: &str, index: usize) -> String {
    if index == 0 {
        selector.to_string()
    } else {
        format!("{selector} [{index}]")
    }
}

fn point(p: (f64, f64)) -> (i64, i64) {
    (p.0.round() as i64, p.1.round() as i64)
}

fn move_to(p: (f64, f64), duration_ms: u64) -> Action {
    let (x, y) = point(p);
    Action::PointerMove {
        x,
        y,
        origin: Origin::Viewport,
        duration_ms,
    }
}

fn required<'a>(t: &'a Option<Target>, what: &str) -> Result<&'a Target, InteractError> {
    t.as_ref()
        .ok_or_else(|| InteractError::InvalidGesture(format!("missing {what}")))
}

/// Turns a gesture into input actions, resolving selector targets to the
/// centres of their absolute boxes in `scene`.
pub fn compile_gesture(g: &Gesture, scene: &RenderedScene) -> Result<ActionSequence, InteractError> {
    g.validate()?;
    let click_on = |t: &Target| -> Result<Vec<Action>, InteractError> {
        let (p, _) = resolve_target(scene, t)?;
        Ok(vec![
            move_to(p, 0),
            Action::PointerDown { button: 0 },
            Action::PointerUp { button: 0 },
        ])
    };
    let seq = match g.kind {
        GestureKind::Hover => {
            let (p, _) = resolve_target(scene, required(&g.target, "target")?)?;
            vec![InputSource::mouse(vec![
                move_to(p, 0),
                Action::Pause {
                    duration_ms: g.dwell.unwrap_or(DEFAULT_DWELL_MS),
                },
            ])]
        }
        GestureKind::Click => vec![InputSource::mouse(click_on(required(&g.target, "target")?)?)],
        GestureKind::DragDrop => {
            let (src, _) = resolve_target(scene, required(&g.target, "target")?)?;
            let (dst, _) = resolve_target(scene, required(&g.secondary_target, "secondary_target")?)?;
            vec![InputSource::mouse(vec![
                move_to(src, 0),
                Action::PointerDown { button: 0 },
                move_to(dst, g.duration.unwrap_or(DEFAULT_DRAG_MS).max(1)),
                Action::PointerUp { button: 0 },
            ])]
        }
        GestureKind::TypeText | GestureKind::KeyPress => {
            let chars: Vec<char> = match g.kind {
                GestureKind::TypeText => g.text.as_deref().unwrap_or_default().chars().collect(),
                _ => vec![key_char(g.key.as_deref().unwrap_or_default())?],
            };
            let mut keys = Vec::new();
            let mut sources = Vec::new();
            // focus the target first; the keyboard idles through those ticks
            if let Some(t) = &g.target {
                let clicks = click_on(t)?;
                keys.extend((0..clicks.len()).map(|_| Action::Pause { duration_ms: 0 }));
                sources.push(InputSource::mouse(clicks));
            }
            for c in chars {
                keys.push(Action::KeyDown { value: c });
                keys.push(Action::KeyUp { value: c });
            }
            sources.push(InputSource::keyboard(keys));
            sources
        }
    };
    Ok(ActionSequence::new(seq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{BBox, SceneElement, SnapshotDocument, Viewport};
    use proptest::prelude::*;

    fn scene() -> RenderedScene {
        let mut root = SceneElement::new("svg");
        root.children = vec![
            SceneElement::new("rect")
                .attr("id", "a")
                .bbox(BBox::new(100.0, 50.0, 10.0, 10.0)),
            SceneElement::new("rect")
                .attr("id", "b")
                .attr("x", 200)
                .attr("y", 100)
                .attr("width", 20)
                .attr("height", 40),
            SceneElement::new("text").attr("id", "label").text("hi"),
        ];
        RenderedScene::from_document(SnapshotDocument {
            version: 1,
            url: String::new(),
            viewport: Viewport {
                width: 400,
                height: 300,
            },
            root,
        })
        .unwrap()
    }

    fn actions(seq: &ActionSequence, source: usize) -> &[Action] {
        &seq.sources[source].actions
    }

    #[test]
    fn hover_center_and_dwell() {
        let mut g = Gesture::hover("#a");
        g.dwell = Some(100);
        let seq = compile_gesture(&g, &scene()).unwrap();
        assert_eq!(
            actions(&seq, 0),
            [
                Action::PointerMove {
                    x: 105,
                    y: 55,
                    origin: Origin::Viewport,
                    duration_ms: 0
                },
                Action::Pause { duration_ms: 100 }
            ]
        );
    }

    #[test]
    fn click_from_local_geometry() {
        let seq = compile_gesture(&Gesture::click("#b"), &scene()).unwrap();
        assert_eq!(
            actions(&seq, 0)[0],
            Action::PointerMove {
                x: 210,
                y: 120,
                origin: Origin::Viewport,
                duration_ms: 0
            }
        );
        assert_eq!(actions(&seq, 0)[1], Action::PointerDown { button: 0 });
        assert_eq!(actions(&seq, 0)[2], Action::PointerUp { button: 0 });
    }

    #[test]
    fn drag_drop_four_actions() {
        let mut g = Gesture::new(GestureKind::DragDrop, Some(Target::Selector("#a".into())));
        g.secondary_target = Some(Target::Point { x: 300.0, y: 10.0 });
        let seq = compile_gesture(&g, &scene()).unwrap();
        let kinds: Vec<&str> = actions(&seq, 0)
            .iter()
            .map(|a| match a {
                Action::PointerMove { .. } => "move",
                Action::PointerDown { .. } => "down",
                Action::PointerUp { .. } => "up",
                _ => "other",
            })
            .collect();
        assert_eq!(kinds, ["move", "down", "move", "up"]);
        assert!(matches!(actions(&seq, 0)[2], Action::PointerMove { x: 300, y: 10, duration_ms, .. } if duration_ms > 0));
    }

    #[test]
    fn type_text_pairs() {
        let mut g = Gesture::new(GestureKind::TypeText, None);
        g.text = Some("ab".into());
        let seq = compile_gesture(&g, &scene()).unwrap();
        assert_eq!(seq.sources.len(), 1);
        assert_eq!(
            actions(&seq, 0),
            [
                Action::KeyDown { value: 'a' },
                Action::KeyUp { value: 'a' },
                Action::KeyDown { value: 'b' },
                Action::KeyUp { value: 'b' },
            ]
        );
    }

    #[test]
    fn key_press_named() {
        let mut g = Gesture::new(GestureKind::KeyPress, Some(Target::Selector("#a".into())));
        g.key = Some("Enter".into());
        let seq = compile_gesture(&g, &scene()).unwrap();
        assert_eq!(seq.sources.len(), 2);
        assert_eq!(actions(&seq, 1).len(), 5);
        assert_eq!(actions(&seq, 1)[3], Action::KeyDown { value: '\u{E007}' });
        seq.validate().unwrap();
    }

    #[test]
    fn errors() {
        let s = scene();
        assert!(matches!(
            compile_gesture(&Gesture::hover(".missing"), &s),
            Err(InteractError::TargetNotFound(t)) if t == ".missing"
        ));
        assert!(matches!(
            compile_gesture(&Gesture::hover("#label"), &s),
            Err(InteractError::NoGeometry(_))
        ));
        let g = Gesture::new(GestureKind::DragDrop, Some(Target::Selector("#a".into())));
        assert!(matches!(compile_gesture(&g, &s), Err(InteractError::InvalidGesture(_))));
        let g = Gesture::new(GestureKind::TypeText, None);
        assert!(matches!(compile_gesture(&g, &s), Err(InteractError::InvalidGesture(_))));
        let mut g = Gesture::new(GestureKind::KeyPress, None);
        g.key = Some("Hyper".into());
        assert!(compile_gesture(&g, &s).is_err());
    }

    fn arb_target() -> impl Strategy<Value = Target> {
        prop_oneof![
            Just(Target::Selector("#a".into())),
            Just(Target::Indexed {
                selector: "rect".into(),
                index: 1
            }),
            (-50.0f64..500.0, -50.0f64..500.0).prop_map(|(x, y)| Target::Point { x, y }),
        ]
    }

    fn arb_gesture() -> impl Strategy<Value = Gesture> {
        (
            prop_oneof![
                Just(GestureKind::Hover),
                Just(GestureKind::Click),
                Just(GestureKind::DragDrop),
                Just(GestureKind::TypeText),
                Just(GestureKind::KeyPress),
            ],
            arb_target(),
            arb_target(),
            any::<bool>(),
            "[a-z ]{0,6}",
            prop::option::of(0u64..1000),
        )
            .prop_map(|(kind, t, t2, with_target, text, dwell)| Gesture {
                kind,
                target: if with_target || !matches!(kind, GestureKind::TypeText | GestureKind::KeyPress) {
                    Some(t)
                } else {
                    None
                },
                secondary_target: Some(t2),
                text: Some(text.clone()),
                key: Some(text.chars().next().map(String::from).unwrap_or_else(|| "Tab".into())),
                dwell,
                duration: dwell,
            })
    }

    proptest! {
        #[test]
        fn compiled_sequences_are_valid(g in arb_gesture()) {
            let seq = compile_gesture(&g, &scene()).unwrap();
            prop_assert!(seq.validate().is_ok());
            let doc = seq.encode().unwrap();
            prop_assert_eq!(ActionSequence::decode(&doc).unwrap(), seq);
        }
    }
}
