//! Input action sequences in the W3C WebDriver "perform actions" format.

use std::collections::BTreeSet;

use serde_json::{json, Map, Value};

use super::WireError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Pointer,
    Key,
    None,
}

impl SourceKind {
    fn wire_name(self) -> &'static str {
        match self {
            SourceKind::Pointer => "pointer",
            SourceKind::Key => "key",
            SourceKind::None => "none",
        }
    }
}

/// Where pointer-move coordinates are measured from. Element origins are
/// not supported: targets are resolved to viewport coordinates up front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Origin {
    #[default]
    Viewport,
    Pointer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    PointerMove {
        x: i64,
        y: i64,
        origin: Origin,
        duration_ms: u64,
    },
    PointerDown {
        button: u32,
    },
    PointerUp {
        button: u32,
    },
    KeyDown {
        value: char,
    },
    KeyUp {
        value: char,
    },
    Pause {
        duration_ms: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSource {
    pub id: String,
    pub kind: SourceKind,
    pub actions: Vec<Action>,
}

impl InputSource {
    pub fn mouse(actions: Vec<Action>) -> Self {
        InputSource {
            id: "mouse".into(),
            kind: SourceKind::Pointer,
            actions,
        }
    }

    pub fn keyboard(actions: Vec<Action>) -> Self {
        InputSource {
            id: "keyboard".into(),
            kind: SourceKind::Key,
            actions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActionSequence {
    pub sources: Vec<InputSource>,
}

impl ActionSequence {
    pub fn new(sources: Vec<InputSource>) -> Self {
        ActionSequence { sources }
    }

    pub fn is_empty(&self) -> bool {
        self.sources.iter().all(|s| s.actions.is_empty())
    }

    /// Checks source ids are unique, each action suits its source kind, and
    /// every pointer button pressed is released later in the same source.
    pub fn validate(&self) -> Result<(), WireError> {
        let mut ids = BTreeSet::new();
        for src in &self.sources {
            if src.id.is_empty() {
                return Err(WireError::InvalidSequence("input source with empty id".into()));
            }
            if !ids.insert(src.id.as_str()) {
                return Err(WireError::InvalidSequence(format!("duplicate source id {:?}", src.id)));
            }
            let mut pressed: Vec<u32> = Vec::new();
            for a in &src.actions {
                let fits = matches!(
                    (src.kind, a),
                    (_, Action::Pause { .. })
                        | (SourceKind::Pointer, Action::PointerMove { .. })
                        | (SourceKind::Pointer, Action::PointerDown { .. })
                        | (SourceKind::Pointer, Action::PointerUp { .. })
                        | (SourceKind::Key, Action::KeyDown { .. })
                        | (SourceKind::Key, Action::KeyUp { .. })
                );
                if !fits {
                    return Err(WireError::InvalidSequence(format!(
                        "{a:?} is not valid in a {} source",
                        src.kind.wire_name()
                    )));
                }
                match a {
                    Action::PointerDown { button } => pressed.push(*button),
                    Action::PointerUp { button } => {
                        if let Some(pos) = pressed.iter().position(|b| b == button) {
                            pressed.remove(pos);
                        }
                    }
                    _ => {}
                }
            }
            if let Some(b) = pressed.first() {
                return Err(WireError::InvalidSequence(format!(
                    "pointerDown(button {b}) in source {:?} is never released",
                    src.id
                )));
            }
        }
        Ok(())
    }

    /// The `POST /session/{id}/actions` body.
    pub fn encode(&self) -> Result<Value, WireError> {
        self.validate()?;
        let sources: Vec<Value> = self.sources.iter().map(encode_source).collect();
        Ok(json!({ "actions": sources }))
    }

    pub fn decode(doc: &Value) -> Result<ActionSequence, WireError> {
        let bad = |m: &str| WireError::InvalidSequence(m.to_string());
        let sources = doc
            .get("actions")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"actions\" array"))?;
        let mut out = Vec::with_capacity(sources.len());
        for s in sources {
            let kind = match s.get("type").and_then(Value::as_str) {
                Some("pointer") => SourceKind::Pointer,
                Some("key") => SourceKind::Key,
                Some("none") => SourceKind::None,
                other => return Err(bad(&format!("unknown source type {other:?}"))),
            };
            let id = s
                .get("id")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("source without id"))?
                .to_string();
            let actions = s
                .get("actions")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("source without actions"))?
                .iter()
                .map(decode_action)
                .collect::<Result<Vec<_>, _>>()?;
            out.push(InputSource { id, kind, actions });
        }
        let seq = ActionSequence { sources: out };
        seq.validate()?;
        Ok(seq)
    }
}

fn encode_source(src: &InputSource) -> Value {
    let mut obj = Map::new();
    obj.insert("type".into(), json!(src.kind.wire_name()));
    obj.insert("id".into(), json!(src.id));
    if src.kind == SourceKind::Pointer {
        obj.insert("parameters".into(), json!({ "pointerType": "mouse" }));
    }
    obj.insert(
        "actions".into(),
        Value::Array(src.actions.iter().map(encode_action).collect()),
    );
    Value::Object(obj)
}

fn encode_action(a: &Action) -> Value {
    match a {
        Action::PointerMove {
            x,
            y,
            origin,
            duration_ms,
        } => json!({
            "type": "pointerMove",
            "duration": duration_ms,
            "origin": match origin { Origin::Viewport => "viewport", Origin::Pointer => "pointer" },
            "x": x,
            "y": y,
        }),
        Action::PointerDown { button } => json!({"type": "pointerDown", "button": button}),
        Action::PointerUp { button } => json!({"type": "pointerUp", "button": button}),
        Action::KeyDown { value } => json!({"type": "keyDown", "value": value.to_string()}),
        Action::KeyUp { value } => json!({"type": "keyUp", "value": value.to_string()}),
        Action::Pause { duration_ms } => json!({"type": "pause", "duration": duration_ms}),
    }
}

fn decode_action(v: &Value) -> Result<Action, WireError> {
    let bad = |m: String| WireError::InvalidSequence(m);
    let int = |k: &str| v.get(k).and_then(Value::as_i64);
    let uint = |k: &str| v.get(k).and_then(Value::as_u64);
    let key = || -> Result<char, WireError> {
        let s = v
            .get("value")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("key action without value".into()))?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(bad(format!("key value {s:?} is not a single code point"))),
        }
    };
    match v.get("type").and_then(Value::as_str) {
        Some("pointerMove") => Ok(Action::PointerMove {
            x: int("x").unwrap_or(0),
            y: int("y").unwrap_or(0),
            origin: match v.get("origin").and_then(Value::as_str) {
                None | Some("viewport") => Origin::Viewport,
                Some("pointer") => Origin::Pointer,
                Some(o) => return Err(bad(format!("unsupported origin {o:?}"))),
            },
            duration_ms: uint("duration").unwrap_or(0),
        }),
        Some("pointerDown") => Ok(Action::PointerDown {
            button: uint("button").unwrap_or(0) as u32,
        }),
        Some("pointerUp") => Ok(Action::PointerUp {
            button: uint("button").unwrap_or(0) as u32,
        }),
        Some("keyDown") => Ok(Action::KeyDown { value: key()? }),
        Some("keyUp") => Ok(Action::KeyUp { value: key()? }),
        Some("pause") => Ok(Action::Pause {
            duration_ms: uint("duration").unwrap_or(0),
        }),
        other => Err(bad(format!("unknown action type {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pause_in_none_source() {
        let seq = ActionSequence::new(vec![InputSource {
            id: "idle".into(),
            kind: SourceKind::None,
            actions: vec![Action::Pause { duration_ms: 100 }],
        }]);
        let doc = seq.encode().unwrap();
        assert_eq!(doc["actions"][0]["type"], "none");
        assert_eq!(doc["actions"][0]["actions"][0], json!({"type": "pause", "duration": 100}));
        assert_eq!(ActionSequence::decode(&doc).unwrap(), seq);
    }

    #[test]
    fn move_down_up() {
        let seq = ActionSequence::new(vec![InputSource::mouse(vec![
            Action::PointerMove { x: 10, y: 20, origin: Origin::Viewport, duration_ms: 0 },
            Action::PointerDown { button: 0 },
            Action::PointerUp { button: 0 },
        ])]);
        let doc = seq.encode().unwrap();
        let types: Vec<&str> = doc["actions"][0]["actions"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["type"].as_str().unwrap())
            .collect();
        assert_eq!(types, ["pointerMove", "pointerDown", "pointerUp"]);
        assert_eq!(doc["actions"][0]["actions"][0]["x"], 10);
        assert_eq!(doc["actions"][0]["actions"][0]["y"], 20);
        assert_eq!(ActionSequence::decode(&doc).unwrap(), seq);
    }

    #[test]
    fn unbalanced_down_is_rejected() {
        let seq = ActionSequence::new(vec![InputSource::mouse(vec![Action::PointerDown { button: 0 }])]);
        assert!(matches!(seq.encode(), Err(WireError::InvalidSequence(_))));
        // releasing a different button does not count
        let seq = ActionSequence::new(vec![InputSource::mouse(vec![
            Action::PointerDown { button: 0 },
            Action::PointerUp { button: 2 },
        ])]);
        assert!(seq.validate().is_err());
        // release before press does not count either
        let seq = ActionSequence::new(vec![InputSource::mouse(vec![
            Action::PointerUp { button: 0 },
            Action::PointerDown { button: 0 },
        ])]);
        assert!(seq.validate().is_err());
    }

    #[test]
    fn kind_mismatch_and_duplicate_ids() {
        let seq = ActionSequence::new(vec![InputSource::keyboard(vec![Action::PointerDown { button: 0 }])]);
        assert!(seq.validate().is_err());
        let seq = ActionSequence::new(vec![InputSource::mouse(vec![]), InputSource::mouse(vec![])]);
        assert!(seq.validate().is_err());
    }

    fn arb_source(idx: usize) -> impl Strategy<Value = InputSource> {
        let pointer = prop::collection::vec(
            prop_oneof![
                (-2000i64..2000, -2000i64..2000, any::<bool>(), 0u64..2000).prop_map(|(x, y, o, d)| {
                    vec![Action::PointerMove {
                        x,
                        y,
                        origin: if o { Origin::Viewport } else { Origin::Pointer },
                        duration_ms: d,
                    }]
                }),
                (0u32..3).prop_map(|b| vec![Action::PointerDown { button: b }, Action::PointerUp { button: b }]),
                (0u64..5000).prop_map(|d| vec![Action::Pause { duration_ms: d }]),
            ],
            0..8,
        )
        .prop_map(move |chunks| InputSource {
            id: format!("p{idx}"),
            kind: SourceKind::Pointer,
            actions: chunks.into_iter().flatten().collect(),
        });
        let key = prop::collection::vec(
            prop_oneof![
                any::<char>().prop_map(|c| vec![Action::KeyDown { value: c }, Action::KeyUp { value: c }]),
                (0u64..5000).prop_map(|d| vec![Action::Pause { duration_ms: d }]),
            ],
            0..8,
        )
        .prop_map(move |chunks| InputSource {
            id: format!("k{idx}"),
            kind: SourceKind::Key,
            actions: chunks.into_iter().flatten().collect(),
        });
        let none = prop::collection::vec((0u64..5000).prop_map(|d| Action::Pause { duration_ms: d }), 0..4)
            .prop_map(move |actions| InputSource {
                id: format!("n{idx}"),
                kind: SourceKind::None,
                actions,
            });
        prop_oneof![pointer, key, none]
    }

    pub(crate) fn arb_sequence() -> impl Strategy<Value = ActionSequence> {
        (0usize..4)
            .prop_flat_map(|n| (0..n).map(arb_source).collect::<Vec<_>>())
            .prop_map(ActionSequence::new)
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(seq in arb_sequence()) {
            let doc = seq.encode().unwrap();
            let text = serde_json::to_string(&doc).unwrap();
            let back: Value = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(ActionSequence::decode(&back).unwrap(), seq);
        }
    }
}
