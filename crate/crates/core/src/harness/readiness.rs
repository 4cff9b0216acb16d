use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::HarnessError;
use crate::probe::COUNT_SCRIPT;
use crate::wire::Session;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorRequirement {
    pub selector: String,
    #[serde(default = "one")]
    pub min_count: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadinessPolicy {
    pub required_anchors: Vec<AnchorRequirement>,
    #[serde(default = "default_poll")]
    pub poll_interval_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    /// Consecutive polls with identical counts needed before the page
    /// counts as settled.
    #[serde(default = "default_stability")]
    pub stability_polls: usize,
}

fn default_poll() -> u64 {
    250
}
fn default_timeout() -> u64 {
    10_000
}
fn default_stability() -> usize {
    2
}

impl Default for ReadinessPolicy {
    fn default() -> Self {
        ReadinessPolicy {
            required_anchors: Vec::new(),
            poll_interval_ms: default_poll(),
            timeout_ms: default_timeout(),
            stability_polls: default_stability(),
        }
    }
}

impl ReadinessPolicy {
    pub fn with_anchors<I, S>(selectors: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ReadinessPolicy {
            required_anchors: selectors
                .into_iter()
                .map(|s| AnchorRequirement { selector: s.into(), min_count: 1 })
                .collect(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.poll_interval_ms == 0 {
            return Err(HarnessError::Policy("poll_interval_ms must be positive".into()));
        }
        if self.stability_polls == 0 {
            return Err(HarnessError::Policy("stability_polls must be at least 1".into()));
        }
        Ok(())
    }

    pub fn selectors(&self) -> Vec<String> {
        self.required_anchors.iter().map(|a| a.selector.clone()).collect()
    }

    fn satisfied(&self, counts: &BTreeMap<String, usize>) -> bool {
        self.required_anchors
            .iter()
            .all(|a| counts.get(&a.selector).copied().unwrap_or(0) >= a.min_count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RenderOutcome {
    Ready { polls: usize },
    TimedOut { last_counts: BTreeMap<String, usize> },
}

/// Polls until every anchor meets its minimum and the counts have been
/// identical for `stability_polls` polls in a row.
pub fn await_render<F>(policy: &ReadinessPolicy, poll: F) -> RenderOutcome
where
    F: FnMut() -> BTreeMap<String, usize>,
{
    await_render_with(policy, poll, std::thread::sleep)
}

/// [`await_render`] with an injectable sleep. The poll budget is
/// `timeout_ms / poll_interval_ms + 1` polls, and real time is also bounded
/// by the timeout.
pub fn await_render_with<F, S>(policy: &ReadinessPolicy, mut poll: F, mut sleep: S) -> RenderOutcome
where
    F: FnMut() -> BTreeMap<String, usize>,
    S: FnMut(Duration),
{
    let interval = Duration::from_millis(policy.poll_interval_ms.max(1));
    let budget = (policy.timeout_ms / policy.poll_interval_ms.max(1)) as usize + 1;
    let deadline = Instant::now() + Duration::from_millis(policy.timeout_ms);
    let stability = policy.stability_polls.max(1);
    let mut last: Option<BTreeMap<String, usize>> = None;
    let mut streak = 0usize;
    for n in 1..=budget {
        let counts = poll();
        streak = if last.as_ref() == Some(&counts) { streak + 1 } else { 1 };
        let ok = policy.satisfied(&counts);
        last = Some(counts);
        if ok && streak >= stability {
            return RenderOutcome::Ready { polls: n };
        }
        if n == budget || Instant::now() >= deadline {
            break;
        }
        sleep(interval);
    }
    RenderOutcome::TimedOut {
        last_counts: last.unwrap_or_default(),
    }
}

/// A poll function running the count script in a live session. Script
/// failures read as zero counts.
pub fn session_counter<'a>(
    session: &'a Session,
    selectors: Vec<String>,
) -> impl FnMut() -> BTreeMap<String, usize> + 'a {
    move || {
        let zero = || selectors.iter().map(|s| (s.clone(), 0)).collect();
        match session.execute_script(COUNT_SCRIPT, &[json!(selectors)]) {
            Ok(Value::Object(map)) => selectors
                .iter()
                .map(|s| (s.clone(), map.get(s).and_then(Value::as_u64).unwrap_or(0) as usize))
                .collect(),
            Ok(_) => zero(),
            Err(e) => {
                log::debug!("readiness poll failed: {e}");
                zero()
            }
        }
    }
}
