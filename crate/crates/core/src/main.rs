use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use vizgrade::deconstruct::{bind_data, extract_group, infer_scale, scale_pairs, InferenceConfig, KeySpec};
use vizgrade::harness::{await_render, serve, session_counter, stage_submission, ReadinessPolicy, SubmissionManifest};
use vizgrade::interact::probe_scene;
use vizgrade::report::{
    emit_results_json, flag_anomalies, grade, render_feedback, GradeConfig, GradeReport, ReportError, ScoreHistory,
};
use vizgrade::rubric::load_dataset_file;
use vizgrade::scene::{parse_snapshot, serialize_snapshot};
use vizgrade::wire::{Capabilities, DriverEndpoint, DEFAULT_CONNECT_TIMEOUT_MS};

const EXIT_FATAL: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "vizgrade", version, about = "Auto-grader for SVG/D3 visualizations")]
struct Cli {
    /// Request timeout for WebDriver calls, in milliseconds.
    #[arg(long, global = true, env = "VIZGRADE_TIMEOUT_MS", default_value_t = 30_000)]
    timeout_ms: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grade one submission against a rubric.
    Grade {
        #[arg(long)]
        submission: PathBuf,
        #[arg(long)]
        rubric: PathBuf,
        /// Grade recorded scenes (a .scene.json file or a sequence directory)
        /// instead of driving a browser.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long, env = "VIZGRADE_WEBDRIVER_URL")]
        webdriver: Option<String>,
        /// Directory for report.json, results.json and artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        results_json: Option<PathBuf>,
        /// Submission manifest; defaults to manifest.json in the submission.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Probe root selector.
        #[arg(long, default_value = "body")]
        root: String,
        /// Score history file to append to and check for anomalies.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Print the marks under an anchor, and optionally inferred scales.
    Deconstruct {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        anchor: String,
        /// Dataset (.csv or .json) for binding and scale inference.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Key field, `@datum` or `@position`.
        #[arg(long, default_value = "@position")]
        key: String,
        /// `field:channel` pairs to infer scales for.
        #[arg(long = "infer", value_name = "FIELD:CHANNEL")]
        infer: Vec<String>,
    },
    /// Render a submission in a browser and save its scene snapshot.
    Snapshot {
        #[arg(long)]
        submission: PathBuf,
        #[arg(long, env = "VIZGRADE_WEBDRIVER_URL")]
        webdriver: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "body")]
        root: String,
    },
    /// Grade a recorded scene sequence directory.
    Replay {
        #[arg(long)]
        snapshot_seq: PathBuf,
        #[arg(long)]
        rubric: PathBuf,
        #[arg(long)]
        results_json: Option<PathBuf>,
    },
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let code = match e {
            ReportError::FatalEnvironment(_) => EXIT_FATAL,
            _ => EXIT_USAGE,
        };
        Failure { code, error: e.into() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Grade {
            submission,
            rubric,
            snapshot,
            webdriver,
            out,
            results_json,
            manifest,
            root,
            history,
        } => {
            let mut cfg = match (snapshot, webdriver) {
                (Some(s), _) => GradeConfig::snapshot(s),
                (None, Some(url)) => GradeConfig::live(url),
                (None, None) => {
                    return Err(usage(anyhow!(
                        "either --snapshot or --webdriver (or VIZGRADE_WEBDRIVER_URL) is required"
                    )))
                }
            };
            cfg.out_dir = out.clone();
            cfg.manifest = manifest;
            cfg.root_selector = root;
            cfg.request_timeout_ms = cli.timeout_ms;
            let report = grade(&submission, &rubric, &cfg)?;
            finish(&report, out.as_deref(), results_json.as_deref(), history.as_deref()).map_err(usage)
        }
        Command::Replay {
            snapshot_seq,
            rubric,
            results_json,
        } => {
            let cfg = GradeConfig::snapshot(&snapshot_seq);
            let report = grade(&snapshot_seq, &rubric, &cfg)?;
            finish(&report, None, results_json.as_deref(), None).map_err(usage)
        }
        Command::Deconstruct {
            snapshot,
            anchor,
            dataset,
            key,
            infer,
        } => deconstruct(&snapshot, &anchor, dataset.as_deref(), &key, &infer).map_err(usage),
        Command::Snapshot {
            submission,
            webdriver,
            out,
            manifest,
            root,
        } => take_snapshot(&submission, &webdriver, &out, manifest.as_deref(), &root, cli.timeout_ms),
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn finish(report: &GradeReport, out: Option<&Path>, results_json: Option<&Path>, history: Option<&Path>) -> Result<()> {
    print!("{}", render_feedback(report));
    let results = emit_results_json(report);
    if let Some(out) = out {
        write(&out.join("report.json"), &serde_json::to_vec_pretty(report)?)?;
        write(&out.join("results.json"), &results)?;
    }
    if let Some(path) = results_json {
        write(path, &results)?;
    }
    if let Some(path) = history {
        let mut h = if path.exists() {
            ScoreHistory::load(path)?
        } else {
            ScoreHistory::new(report.submission_id.clone())
        };
        h.push(report.timestamp, report.total)?;
        h.save(path)?;
        for flag in flag_anomalies(&h) {
            println!("ANOMALY {}: {}", flag.submission_id, flag.message);
        }
    }
    Ok(())
}

fn deconstruct(snapshot: &Path, anchor: &str, dataset: Option<&Path>, key: &str, infer: &[String]) -> Result<()> {
    let bytes = std::fs::read(snapshot).with_context(|| format!("reading {}", snapshot.display()))?;
    let scene = parse_snapshot(&bytes)?;
    let group = extract_group(&scene, anchor)?;
    let marks: Vec<Value> = group
        .marks
        .iter()
        .map(|m| {
            json!({
                "element": scene.describe(m.element),
                "geometry": m.geometry,
                "channels": m.channels,
                "datum": m.datum,
            })
        })
        .collect();
    let mut doc = json!({ "anchor": group.anchor, "mark_tag": group.mark_tag, "marks": marks });
    if let Some(path) = dataset {
        let rows = load_dataset_file(path)?;
        let binding = bind_data(&group, &rows, &KeySpec::from(key.to_string()))?;
        doc["completeness"] = json!({
            "missing": binding.report.missing.iter().map(|m| m.key.clone()).collect::<Vec<_>>(),
            "extra": binding.report.extra.len(),
        });
        let mut scales = Vec::new();
        for spec in infer {
            let (field, channel) = spec
                .split_once(':')
                .ok_or_else(|| anyhow!("--infer expects FIELD:CHANNEL, got {spec:?}"))?;
            let pairs = scale_pairs(&group, &binding, &rows, field, channel);
            scales.push(match infer_scale(&pairs, field, channel, &InferenceConfig::default()) {
                Ok(model) => serde_json::to_value(model)?,
                Err(e) => json!({ "field": field, "channel": channel, "error": e.to_string() }),
            });
        }
        doc["scales"] = Value::Array(scales);
    } else if !infer.is_empty() {
        bail!("--infer needs --dataset");
    }
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn take_snapshot(
    submission: &Path,
    webdriver: &str,
    out: &Path,
    manifest: Option<&Path>,
    root: &str,
    timeout_ms: u64,
) -> Result<(), Failure> {
    let manifest_path = manifest
        .map(Path::to_path_buf)
        .or_else(|| Some(submission.join("manifest.json")).filter(|p| p.is_file()));
    let manifest = match manifest_path {
        Some(p) => SubmissionManifest::load(&p).map_err(|e| usage(e.into()))?,
        None => SubmissionManifest::from_json(br#"{"required_files": ["index.html"], "entry_point": "index.html"}"#)
            .map_err(|e| usage(e.into()))?,
    };
    let mut site = stage_submission(submission, &manifest).map_err(|e| usage(e.into()))?;
    let fatal = |e: anyhow::Error| Failure { code: EXIT_FATAL, error: e };
    let _server = serve(&mut site).map_err(|e| fatal(e.into()))?;
    let endpoint = DriverEndpoint::with_timeouts(
        webdriver,
        Duration::from_millis(DEFAULT_CONNECT_TIMEOUT_MS),
        Duration::from_millis(timeout_ms),
    );
    let session = endpoint
        .new_session(&Capabilities::default())
        .map_err(|e| fatal(e.into()))?;
    let result = (|| -> Result<Vec<u8>> {
        session.navigate(&site.entry_url().expect("served"))?;
        let policy = ReadinessPolicy::with_anchors([root.to_string()]);
        let outcome = await_render(&policy, session_counter(&session, policy.selectors()));
        log::info!("readiness: {outcome:?}");
        let scene = probe_scene(&session, &vizgrade::probe::probe_script(), root)?;
        Ok(serialize_snapshot(&scene))
    })();
    let _ = session.delete();
    let bytes = result.map_err(fatal)?;
    write(out, &bytes).map_err(usage)
}
