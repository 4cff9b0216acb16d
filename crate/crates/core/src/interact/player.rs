use std::time::Duration;

use serde_json::{json, Value};

use super::InteractError;
use crate::scene::{self, RenderedScene};
use crate::wire::{ActionSequence, Session};

/// Something that can show the current page state and apply input.
pub trait ScenePlayer {
    fn capture(&mut self) -> Result<RenderedScene, InteractError>;
    fn act(&mut self, seq: &ActionSequence) -> Result<(), InteractError>;
    /// Waits for effects to settle. Recorded players ignore this.
    fn settle(&mut self, _ms: u64) {}
}

/// Replays a recorded sequence of scenes; each capture returns the next
/// one and the last scene repeats once the recording runs out.
#[derive(Debug, Clone)]
pub struct ScriptedPlayer {
    recording: Vec<RenderedScene>,
    cursor: usize,
    acted: Vec<ActionSequence>,
}

impl ScriptedPlayer {
    pub fn new(recording: Vec<RenderedScene>) -> Self {
        ScriptedPlayer {
            recording,
            cursor: 0,
            acted: Vec::new(),
        }
    }

    /// Sequences passed to `act`, in order.
    pub fn acted(&self) -> &[ActionSequence] {
        &self.acted
    }

    pub fn recording(&self) -> &[RenderedScene] {
        &self.recording
    }
}

impl ScenePlayer for ScriptedPlayer {
    fn capture(&mut self) -> Result<RenderedScene, InteractError> {
        let last = self
            .recording
            .len()
            .checked_sub(1)
            .ok_or_else(|| InteractError::Probe("empty recording".into()))?;
        let scene = self.recording[self.cursor.min(last)].clone();
        self.cursor += 1;
        Ok(scene)
    }

    fn act(&mut self, seq: &ActionSequence) -> Result<(), InteractError> {
        seq.validate()?;
        self.acted.push(seq.clone());
        Ok(())
    }
}

/// Drives a browser session; captures go through the in-page probe.
#[derive(Debug)]
pub struct LivePlayer<'s> {
    session: &'s Session,
    root_selector: String,
    probe: String,
}

impl<'s> LivePlayer<'s> {
    pub fn new(session: &'s Session, root_selector: &str) -> Self {
        LivePlayer {
            session,
            root_selector: root_selector.to_string(),
            probe: crate::probe::probe_script().into_owned(),
        }
    }
}

/// Runs the probe and parses its result into a scene.
pub fn probe_scene(
    session: &Session,
    probe: &str,
    root_selector: &str,
) -> Result<RenderedScene, InteractError> {
    let doc = session.execute_script(probe, &[json!(root_selector)])?;
    if let Some(err) = doc.get("error").and_then(Value::as_str) {
        return Err(InteractError::Probe(format!("{err} for root {root_selector:?}")));
    }
    let bytes = serde_json::to_vec(&doc).map_err(|e| InteractError::Probe(e.to_string()))?;
    Ok(scene::parse_snapshot(&bytes)?)
}

impl ScenePlayer for LivePlayer<'_> {
    fn capture(&mut self) -> Result<RenderedScene, InteractError> {
        probe_scene(self.session, &self.probe, &self.root_selector)
    }

    fn act(&mut self, seq: &ActionSequence) -> Result<(), InteractError> {
        self.session.perform_actions(seq)?;
        self.session.release_actions()?;
        Ok(())
    }

    fn settle(&mut self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }
}
