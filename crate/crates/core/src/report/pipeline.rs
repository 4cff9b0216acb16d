use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde_json::Value;

use super::{Artifact, ArtifactKind, EnvironmentInfo, GradeReport, ReportError};
use crate::harness::{
    await_render, serve, session_counter, stage_submission, HarnessError, ReadinessPolicy, RenderOutcome,
    SubmissionManifest,
};
use crate::interact::{grade_interaction, probe_scene, InteractError, InteractionSpec, LivePlayer, ScriptedPlayer};
use crate::probe::probe_script;
use crate::rubric::{load_rubric_file, resolve_parameters, run_checks, CheckContext, CheckResult, Rubric};
use crate::scene::{parse_snapshot, serialize_snapshot, RenderedScene};
use crate::wire::{Capabilities, DriverEndpoint, Session, WireError, DEFAULT_CONNECT_TIMEOUT_MS, DEFAULT_REQUEST_TIMEOUT_MS};

#[derive(Debug, Clone, PartialEq)]
pub enum GradeMode {
    /// A `.scene.json` file, or a directory holding `00-base.scene.json`
    /// and `NN-<interaction>-<tag>.scene.json` recordings.
    Snapshot(PathBuf),
    Live { webdriver_url: String },
}

#[derive(Debug, Clone)]
pub struct GradeConfig {
    pub mode: GradeMode,
    /// Where artifacts (scene snapshot, screenshot) are written.
    pub out_dir: Option<PathBuf>,
    /// Probe root in live mode.
    pub root_selector: String,
    /// Defaults to waiting for the probe root.
    pub readiness: Option<ReadinessPolicy>,
    /// Defaults to `manifest.json` in the submission, else `index.html`
    /// alone.
    pub manifest: Option<PathBuf>,
    pub capabilities: Capabilities,
    pub request_timeout_ms: u64,
    /// Fixed report timestamp; the current time when unset.
    pub timestamp: Option<DateTime<Utc>>,
}

impl GradeConfig {
    fn with_mode(mode: GradeMode) -> Self {
        GradeConfig {
            mode,
            out_dir: None,
            root_selector: "body".into(),
            readiness: None,
            manifest: None,
            capabilities: Capabilities::default(),
            request_timeout_ms: DEFAULT_REQUEST_TIMEOUT_MS,
            timestamp: None,
        }
    }

    pub fn snapshot(path: impl Into<PathBuf>) -> Self {
        Self::with_mode(GradeMode::Snapshot(path.into()))
    }

    pub fn live(webdriver_url: impl Into<String>) -> Self {
        Self::with_mode(GradeMode::Live {
            webdriver_url: webdriver_url.into(),
        })
    }
}

/// Recorded scenes for snapshot-mode grading.
#[derive(Debug, Clone)]
pub struct SnapshotSequence {
    pub base: RenderedScene,
    /// Per interaction id, the recorded captures in order.
    pub interactions: BTreeMap<String, Vec<RenderedScene>>,
}

fn read_scene(path: &Path) -> Result<RenderedScene, ReportError> {
    let bytes = std::fs::read(path).map_err(|e| ReportError::Snapshot(format!("{}: {e}", path.display())))?;
    parse_snapshot(&bytes).map_err(|e| ReportError::Snapshot(format!("{}: {e}", path.display())))
}

/// Loads a single snapshot file or a recorded sequence directory.
pub fn load_snapshot_sequence(path: &Path) -> Result<SnapshotSequence, ReportError> {
    if !path.is_dir() {
        return Ok(SnapshotSequence {
            base: read_scene(path)?,
            interactions: BTreeMap::new(),
        });
    }
    let mut names: Vec<String> = std::fs::read_dir(path)
        .map_err(|e| ReportError::Snapshot(format!("{}: {e}", path.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".scene.json"))
        .collect();
    names.sort();
    let mut base = None;
    let mut interactions: BTreeMap<String, Vec<RenderedScene>> = BTreeMap::new();
    for name in names {
        let stem = name.trim_end_matches(".scene.json");
        let rest = stem
            .split_once('-')
            .filter(|(nn, _)| !nn.is_empty() && nn.chars().all(|c| c.is_ascii_digit()))
            .map(|(_, rest)| rest)
            .ok_or_else(|| ReportError::Snapshot(format!("{name}: expected an NN- prefix")))?;
        let scene = read_scene(&path.join(&name))?;
        if rest == "base" {
            base = Some(scene);
        } else {
            let (id, _tag) = rest
                .rsplit_once('-')
                .ok_or_else(|| ReportError::Snapshot(format!("{name}: expected NN-<interaction>-<tag>")))?;
            interactions.entry(id.to_string()).or_default().push(scene);
        }
    }
    let base = base.ok_or_else(|| ReportError::Snapshot(format!("{}: no NN-base.scene.json", path.display())))?;
    Ok(SnapshotSequence { base, interactions })
}

fn failing(rubric: &Rubric, reason: &str) -> Vec<CheckResult> {
    rubric
        .checks
        .iter()
        .map(|c| CheckResult {
            id: c.id.clone(),
            passed: false,
            points_awarded: 0.0,
            points_possible: c.points,
            observed: String::new(),
            expected: String::new(),
            feedback: reason.to_string(),
        })
        .collect()
}

fn interaction_failure(spec: &InteractionSpec, reason: String) -> CheckResult {
    CheckResult {
        id: spec.id.clone(),
        passed: false,
        points_awarded: 0.0,
        points_possible: 0.0,
        observed: String::new(),
        expected: String::new(),
        feedback: reason,
    }
}

/// Runs parameters, interactions and checks over already-captured state.
fn grade_core<F>(rubric: &Rubric, dataset: &[Value], base: &RenderedScene, mut interact: F) -> Vec<CheckResult>
where
    F: FnMut(&InteractionSpec, &crate::rubric::expr::Scope<'_>) -> CheckResult,
{
    let env = resolve_parameters(rubric, base, dataset);
    let scope = env.scope(dataset);
    let interactions: BTreeMap<String, CheckResult> = rubric
        .interactions
        .iter()
        .map(|spec| (spec.id.clone(), interact(spec, &scope)))
        .collect();
    let ctx = CheckContext {
        scene: base,
        dataset,
        env: &env,
        tolerances: rubric.tolerances.clone(),
        inference: rubric.inference.clone(),
        interactions: &interactions,
    };
    run_checks(&rubric.checks, &ctx)
}

/// Grades recorded scenes. Pure: the same inputs give the same results.
pub fn grade_scenes(rubric: &Rubric, dataset: &[Value], seq: &SnapshotSequence) -> Vec<CheckResult> {
    grade_core(rubric, dataset, &seq.base, |spec, scope| match seq.interactions.get(&spec.id) {
        Some(rec) => grade_interaction(spec, &mut ScriptedPlayer::new(rec.clone()), scope),
        None => interaction_failure(spec, format!("no recorded scenes for interaction {:?}", spec.id)),
    })
}

fn tool_version() -> String {
    format!("vizgrade {}", env!("CARGO_PKG_VERSION"))
}

fn io_err(path: &Path, e: std::io::Error) -> ReportError {
    ReportError::Io(format!("{}: {e}", path.display()))
}

fn write_artifact(out: &Path, name: &str, bytes: &[u8], kind: ArtifactKind) -> Result<Artifact, ReportError> {
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let path = out.join(name);
    std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    Ok(Artifact { kind, path })
}

/// Grades one submission, live through a WebDriver endpoint or from
/// recorded scenes. Only environment failures are errors; problems with
/// the submission become failing checks.
pub fn grade(submission_dir: &Path, rubric_file: &Path, config: &GradeConfig) -> Result<GradeReport, ReportError> {
    let rubric = load_rubric_file(rubric_file)?;
    let dataset = rubric.load_dataset()?;
    let submission_id = submission_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| submission_dir.display().to_string());
    let timestamp = config.timestamp.unwrap_or_else(Utc::now);

    match &config.mode {
        GradeMode::Snapshot(path) => {
            let seq = load_snapshot_sequence(path)?;
            let results = grade_scenes(&rubric, &dataset, &seq);
            let env = EnvironmentInfo {
                tool_version: tool_version(),
                viewport: Some(seq.base.viewport),
                driver: "snapshot".into(),
            };
            let mut report = GradeReport::new(submission_id, timestamp, results, rubric.scoring.max_points, env);
            if let Some(out) = &config.out_dir {
                report.artifacts.push(write_artifact(
                    out,
                    "scene.json",
                    &serialize_snapshot(&seq.base),
                    ArtifactKind::SceneSnapshot,
                )?);
            }
            Ok(report)
        }
        GradeMode::Live { webdriver_url } => {
            let live = grade_live(submission_dir, &rubric, &dataset, config, webdriver_url)?;
            let env = EnvironmentInfo {
                tool_version: tool_version(),
                viewport: Some(config.capabilities.viewport),
                driver: format!("{} via {webdriver_url}", config.capabilities.browser_name),
            };
            let mut report = GradeReport::new(submission_id, timestamp, live.results, rubric.scoring.max_points, env);
            report.artifacts = live.artifacts;
            Ok(report)
        }
    }
}

struct LiveOutcome {
    results: Vec<CheckResult>,
    artifacts: Vec<Artifact>,
}

fn fatal(e: impl std::fmt::Display) -> ReportError {
    ReportError::FatalEnvironment(e.to_string())
}

/// Wire failures that say the browser or driver is broken rather than the
/// page.
fn is_environmental(e: &WireError) -> bool {
    matches!(
        e,
        WireError::ConnectionFailed { .. }
            | WireError::SessionNotCreated(_)
            | WireError::StaleSession(_)
            | WireError::RequestTimeout(_)
            | WireError::DecodeError(_)
    )
}

fn load_manifest(submission_dir: &Path, config: &GradeConfig) -> Result<SubmissionManifest, ReportError> {
    let path = config
        .manifest
        .clone()
        .or_else(|| Some(submission_dir.join("manifest.json")).filter(|p| p.is_file()));
    match path {
        Some(p) => SubmissionManifest::load(&p).map_err(|e| ReportError::Io(e.to_string())),
        None => Ok(SubmissionManifest {
            required_files: vec!["index.html".into()],
            entry_point: "index.html".into(),
            pinned_resources: Vec::new(),
            dataset_files: Vec::new(),
            base_dir: None,
        }),
    }
}

fn grade_live(
    submission_dir: &Path,
    rubric: &Rubric,
    dataset: &[Value],
    config: &GradeConfig,
    webdriver_url: &str,
) -> Result<LiveOutcome, ReportError> {
    let manifest = load_manifest(submission_dir, config)?;
    let mut site = match stage_submission(submission_dir, &manifest) {
        Ok(s) => s,
        Err(e @ (HarnessError::MissingFiles(_) | HarnessError::PathEscape(_))) => {
            return Ok(LiveOutcome {
                results: failing(rubric, &format!("submission could not be staged: {e}")),
                artifacts: Vec::new(),
            })
        }
        Err(e) => return Err(fatal(e)),
    };
    let _server = serve(&mut site).map_err(fatal)?;
    let entry = site.entry_url().expect("served site has a base URL");
    let endpoint = DriverEndpoint::with_timeouts(
        webdriver_url,
        Duration::from_millis(DEFAULT_CONNECT_TIMEOUT_MS),
        Duration::from_millis(config.request_timeout_ms),
    );
    let session = endpoint.new_session(&config.capabilities).map_err(fatal)?;
    let outcome = drive_session(&session, &entry, rubric, dataset, config);
    if let Err(e) = session.delete() {
        log::warn!("cannot delete session: {e}");
    }
    outcome
}

/// Loads the page and waits for it to render. `Ok(Err(reason))` is a
/// submission-attributable failure.
fn load_page(session: &Session, entry: &str, policy: &ReadinessPolicy) -> Result<Result<(), String>, ReportError> {
    match session.navigate(entry) {
        Ok(()) => {}
        Err(e) if is_environmental(&e) => return Err(fatal(e)),
        Err(e) => return Ok(Err(format!("page failed to load: {e}"))),
    }
    match await_render(policy, session_counter(session, policy.selectors())) {
        RenderOutcome::Ready { polls } => log::debug!("rendered after {polls} polls"),
        RenderOutcome::TimedOut { last_counts } => {
            log::warn!("page did not settle before the timeout; last counts {last_counts:?}")
        }
    }
    Ok(Ok(()))
}

fn drive_session(
    session: &Session,
    entry: &str,
    rubric: &Rubric,
    dataset: &[Value],
    config: &GradeConfig,
) -> Result<LiveOutcome, ReportError> {
    let policy = config
        .readiness
        .clone()
        .unwrap_or_else(|| ReadinessPolicy::with_anchors([config.root_selector.clone()]));
    policy.validate().map_err(|e| ReportError::Io(e.to_string()))?;
    let mut artifacts = Vec::new();

    if let Err(reason) = load_page(session, entry, &policy)? {
        return Ok(LiveOutcome {
            results: failing(rubric, &reason),
            artifacts,
        });
    }
    let probe = probe_script();
    let base = match probe_scene(session, &probe, &config.root_selector) {
        Ok(s) => s,
        Err(InteractError::Wire(e)) if is_environmental(&e) => return Err(fatal(e)),
        Err(e) => {
            return Ok(LiveOutcome {
                results: failing(rubric, &format!("could not capture the page: {e}")),
                artifacts,
            })
        }
    };
    if let Some(out) = &config.out_dir {
        artifacts.push(write_artifact(out, "scene.json", &serialize_snapshot(&base), ArtifactKind::SceneSnapshot)?);
    }

    let mut env_error = None;
    let results = grade_core(rubric, dataset, &base, |spec, scope| {
        if env_error.is_some() {
            return interaction_failure(spec, "skipped after an environment failure".into());
        }
        match load_page(session, entry, &policy) {
            Ok(Ok(())) => {}
            Ok(Err(reason)) => return interaction_failure(spec, reason),
            Err(e) => {
                env_error = Some(e);
                return interaction_failure(spec, "skipped after an environment failure".into());
            }
        }
        let mut player = LivePlayer::new(session, &config.root_selector);
        grade_interaction(spec, &mut player, scope)
    });
    if let Some(e) = env_error {
        return Err(e);
    }

    match session.take_screenshot() {
        Ok(png) => {
            if let Some(out) = &config.out_dir {
                artifacts.push(write_artifact(out, "screenshot.png", &png, ArtifactKind::Screenshot)?);
            }
        }
        Err(e) if is_environmental(&e) => return Err(fatal(e)),
        Err(e) => log::warn!("screenshot failed: {e}"),
    }
    Ok(LiveOutcome { results, artifacts })
}
