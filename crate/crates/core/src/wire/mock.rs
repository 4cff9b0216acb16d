//! In-process WebDriver stand-in speaking the subset of the protocol the
//! client uses. Scenes can be preloaded so the probe and readiness
//! scripts return canned snapshots.

use std::io;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

use super::ActionSequence;
use crate::probe::{COUNT_MARKER, PROBE_MARKER};
use crate::rubric::expr::{eval_expression, ExprValue, Scope};
use crate::scene::{self, Viewport};

/// What a script handler sees.
#[derive(Debug, Clone)]
pub struct ScriptCall<'a> {
    pub script: &'a str,
    pub args: &'a [Value],
    /// Number of `POST /actions` calls since the last navigation.
    pub actions_performed: usize,
}

pub type ScriptHandler = Arc<dyn Fn(&ScriptCall<'_>) -> Result<Value, String> + Send + Sync>;

#[derive(Clone)]
pub struct MockConfig {
    pub session_id: String,
    pub reject_capabilities: bool,
    /// How long `POST /url` takes.
    pub navigation_delay: Duration,
    /// Navigations slower than this fail with a "timeout" error.
    pub page_load_timeout: Duration,
    /// Status and error code returned by `POST /actions` instead of success.
    pub actions_failure: Option<(u16, String)>,
    /// Scene documents: the probe returns `scenes[min(n, len - 1)]` where
    /// `n` is the number of action calls since navigation.
    pub scenes: Vec<Value>,
    /// Readiness-count calls answered with zero counts before the scene
    /// shows up.
    pub render_after_polls: usize,
    /// Replaces the built-in script behaviour entirely.
    pub script_handler: Option<ScriptHandler>,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            session_id: "s-1".into(),
            reject_capabilities: false,
            navigation_delay: Duration::ZERO,
            page_load_timeout: Duration::from_secs(300),
            actions_failure: None,
            scenes: Vec::new(),
            render_after_polls: 0,
            script_handler: None,
        }
    }
}

impl std::fmt::Debug for MockConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MockConfig")
            .field("session_id", &self.session_id)
            .field("scenes", &self.scenes.len())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoggedRequest {
    pub method: String,
    pub path: String,
    pub body: Value,
}

#[derive(Debug, Default)]
struct MockState {
    sessions: Vec<String>,
    viewport: Option<Viewport>,
    url: Option<String>,
    actions_performed: usize,
    count_polls: usize,
    log: Vec<LoggedRequest>,
    performed: Vec<ActionSequence>,
}

/// A running mock server; shut down on drop.
pub struct MockWebDriver {
    url: String,
    server: Arc<Server>,
    state: Arc<Mutex<MockState>>,
    workers: Vec<JoinHandle<()>>,
}

impl MockWebDriver {
    pub fn start(config: MockConfig) -> io::Result<MockWebDriver> {
        let server = Server::http("127.0.0.1:0").map_err(|e| io::Error::new(io::ErrorKind::Other, e))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| io::Error::new(io::ErrorKind::Other, "mock bound to a non-IP address"))?;
        let server = Arc::new(server);
        let state = Arc::new(Mutex::new(MockState::default()));
        let config = Arc::new(config);
        let workers = (0..2)
            .map(|_| {
                let server = Arc::clone(&server);
                let state = Arc::clone(&state);
                let config = Arc::clone(&config);
                std::thread::spawn(move || {
                    while let Ok(mut req) = server.recv() {
                        let mut raw = String::new();
                        let _ = req.as_reader().read_to_string(&mut raw);
                        let method = req.method().as_str().to_string();
                        let path = req.url().to_string();
                        let (status, body) = handle(&config, &state, &method, &path, &raw);
                        let resp = Response::from_string(body.to_string())
                            .with_status_code(status)
                            .with_header(
                                Header::from_bytes("Content-Type", "application/json; charset=utf-8")
                                    .expect("static header"),
                            );
                        let _ = req.respond(resp);
                    }
                })
            })
            .collect();
        Ok(MockWebDriver {
            url: format!("http://{addr}"),
            server,
            state,
            workers,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.state.lock().unwrap().log.clone()
    }

    /// Sequences received on `POST /actions`, decoded.
    pub fn performed_actions(&self) -> Vec<ActionSequence> {
        self.state.lock().unwrap().performed.clone()
    }

    pub fn live_sessions(&self) -> Vec<String> {
        self.state.lock().unwrap().sessions.clone()
    }

    pub fn current_url(&self) -> Option<String> {
        self.state.lock().unwrap().url.clone()
    }

    /// Forgets a session as if the browser had gone away.
    pub fn expire_session(&self, id: &str) {
        self.state.lock().unwrap().sessions.retain(|s| s != id);
    }
}

impl Drop for MockWebDriver {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn ok(value: Value) -> (u16, Value) {
    (200, json!({ "value": value }))
}

fn err(status: u16, error: &str, message: &str) -> (u16, Value) {
    (
        status,
        json!({ "value": { "error": error, "message": message, "stacktrace": "" } }),
    )
}

fn handle(
    config: &MockConfig,
    state: &Mutex<MockState>,
    method: &str,
    path: &str,
    raw: &str,
) -> (u16, Value) {
    let body: Value = if raw.trim().is_empty() {
        Value::Null
    } else {
        match serde_json::from_str(raw) {
            Ok(v) => v,
            Err(e) => return err(400, "invalid argument", &format!("bad JSON body: {e}")),
        }
    };
    state.lock().unwrap().log.push(LoggedRequest {
        method: method.to_string(),
        path: path.to_string(),
        body: body.clone(),
    });
    let segs: Vec<&str> = path.trim_matches('/').split('/').collect();
    match (method, segs.as_slice()) {
        ("POST", ["session"]) => new_session(config, state, &body),
        (m, ["session", id, rest @ ..]) => {
            if !state.lock().unwrap().sessions.iter().any(|s| s == id) {
                return err(404, "invalid session id", &format!("no session {id}"));
            }
            match (m, rest) {
                ("DELETE", []) => {
                    state.lock().unwrap().sessions.retain(|s| s != id);
                    ok(Value::Null)
                }
                ("POST", ["url"]) => navigate(config, state, &body),
                ("POST", ["execute", "sync"]) => execute(config, state, &body),
                ("POST", ["actions"]) => actions(config, state, &body),
                ("DELETE", ["actions"]) => ok(Value::Null),
                ("GET", ["screenshot"]) => {
                    let vp = state.lock().unwrap().viewport.unwrap_or(Viewport {
                        width: 1024,
                        height: 768,
                    });
                    match synthetic_png(vp) {
                        Ok(bytes) => ok(json!(base64::engine::general_purpose::STANDARD.encode(bytes))),
                        Err(e) => err(500, "unknown error", &e),
                    }
                }
                _ => err(404, "unknown command", path),
            }
        }
        _ => err(404, "unknown command", path),
    }
}

fn new_session(config: &MockConfig, state: &Mutex<MockState>, body: &Value) -> (u16, Value) {
    if config.reject_capabilities {
        return err(500, "session not created", "requested capabilities cannot be satisfied");
    }
    let always = &body["capabilities"]["alwaysMatch"];
    if !always.is_object() {
        return err(400, "invalid argument", "capabilities.alwaysMatch missing");
    }
    let viewport = requested_viewport(always);
    let mut st = state.lock().unwrap();
    st.sessions.push(config.session_id.clone());
    st.viewport = viewport;
    ok(json!({ "sessionId": config.session_id, "capabilities": always }))
}

/// Reads `--window-size=W,H` (chrome) or `--width=`/`--height=` (firefox).
fn requested_viewport(always: &Value) -> Option<Viewport> {
    let args: Vec<&str> = ["goog:chromeOptions", "moz:firefoxOptions"]
        .iter()
        .filter_map(|k| always[*k]["args"].as_array())
        .flatten()
        .filter_map(Value::as_str)
        .collect();
    let (mut w, mut h) = (None, None);
    for a in args {
        if let Some(size) = a.strip_prefix("--window-size=") {
            let mut it = size.split(',').map(|s| s.trim().parse::<u32>().ok());
            w = it.next().flatten();
            h = it.next().flatten();
        } else if let Some(v) = a.strip_prefix("--width=") {
            w = v.parse().ok();
        } else if let Some(v) = a.strip_prefix("--height=") {
            h = v.parse().ok();
        }
    }
    Some(Viewport {
        width: w?,
        height: h?,
    })
}

fn navigate(config: &MockConfig, state: &Mutex<MockState>, body: &Value) -> (u16, Value) {
    let Some(url) = body.get("url").and_then(Value::as_str) else {
        return err(400, "invalid argument", "missing url");
    };
    if config.navigation_delay > config.page_load_timeout {
        std::thread::sleep(config.page_load_timeout);
        return err(500, "timeout", "page load timed out");
    }
    std::thread::sleep(config.navigation_delay);
    let mut st = state.lock().unwrap();
    st.url = Some(url.to_string());
    st.actions_performed = 0;
    st.count_polls = 0;
    ok(Value::Null)
}

fn execute(config: &MockConfig, state: &Mutex<MockState>, body: &Value) -> (u16, Value) {
    let Some(script) = body.get("script").and_then(Value::as_str) else {
        return err(400, "invalid argument", "missing script");
    };
    let args = body
        .get("args")
        .and_then(Value::as_array)
        .cloned()
        .unwrap_or_default();
    let actions_performed = state.lock().unwrap().actions_performed;
    let call = ScriptCall {
        script,
        args: &args,
        actions_performed,
    };
    let result = match &config.script_handler {
        Some(h) => h(&call),
        None => builtin_script(config, state, &call),
    };
    match result {
        Ok(v) => ok(v),
        Err(msg) => err(500, "javascript error", &msg),
    }
}

fn current_scene<'a>(config: &'a MockConfig, n: usize) -> Option<&'a Value> {
    if config.scenes.is_empty() {
        return None;
    }
    config.scenes.get(n.min(config.scenes.len() - 1))
}

fn builtin_script(config: &MockConfig, state: &Mutex<MockState>, call: &ScriptCall<'_>) -> Result<Value, String> {
    let script = call.script;
    if script.contains(PROBE_MARKER) {
        return Ok(current_scene(config, call.actions_performed)
            .cloned()
            .unwrap_or_else(|| json!({ "error": "RootNotFound" })));
    }
    if script.contains(COUNT_MARKER) {
        let polls = {
            let mut st = state.lock().unwrap();
            st.count_polls += 1;
            st.count_polls
        };
        let scene = current_scene(config, call.actions_performed)
            .filter(|_| polls > config.render_after_polls)
            .and_then(|doc| scene::parse_snapshot(doc.to_string().as_bytes()).ok());
        let mut out = serde_json::Map::new();
        for sel in call.args.first().and_then(Value::as_array).into_iter().flatten() {
            let Some(sel) = sel.as_str() else { continue };
            let n = match &scene {
                Some(s) => scene::query(s, sel).map(|r| r.len()).unwrap_or(0),
                None => 0,
            };
            out.insert(sel.to_string(), json!(n));
        }
        return Ok(Value::Object(out));
    }
    let trimmed = script.trim().trim_end_matches(';').trim();
    if let Some(rest) = trimmed.strip_prefix("throw") {
        return Err(rest.trim().trim_matches(|c| c == '"' || c == '\'').to_string());
    }
    if let Some(expr) = trimmed.strip_prefix("return") {
        let expr = expr.trim();
        if expr.is_empty() || expr == "null" || expr == "undefined" {
            return Ok(Value::Null);
        }
        let scope = Scope::new(&[]);
        return match eval_expression(expr, &scope) {
            Ok(ExprValue::Number(n)) if n.fract() == 0.0 && n.abs() < 9e15 => Ok(json!(n as i64)),
            Ok(ExprValue::Number(n)) => Ok(json!(n)),
            Ok(ExprValue::Str(s)) => Ok(json!(s)),
            Ok(ExprValue::Json(j)) => Ok(j),
            Err(e) => Err(format!("SyntaxError: {e}")),
        };
    }
    Ok(Value::Null)
}

fn actions(config: &MockConfig, state: &Mutex<MockState>, body: &Value) -> (u16, Value) {
    if let Some((status, error)) = &config.actions_failure {
        return err(*status, error, "actions failed");
    }
    match ActionSequence::decode(body) {
        Ok(seq) => {
            let mut st = state.lock().unwrap();
            st.performed.push(seq);
            st.actions_performed += 1;
            ok(Value::Null)
        }
        Err(e) => err(400, "invalid argument", &e.to_string()),
    }
}

/// A plain grey PNG of the viewport size.
fn synthetic_png(vp: Viewport) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, vp.width.max(1), vp.height.max(1));
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| e.to_string())?;
        let data = vec![0xEEu8; (vp.width.max(1) * vp.height.max(1)) as usize];
        w.write_image_data(&data).map_err(|e| e.to_string())?;
    }
    Ok(out)
}
