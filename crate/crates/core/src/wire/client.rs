use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Map, Value};

use super::{
    ActionSequence, WireError, DEFAULT_CONNECT_TIMEOUT_MS, DEFAULT_REQUEST_TIMEOUT_MS,
    WEBDRIVER_URL_ENV,
};
use crate::scene::Viewport;

/// Requested browser configuration. Anything not modelled goes in `extra`
/// and is merged into `alwaysMatch` verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct Capabilities {
    pub browser_name: String,
    pub headless: bool,
    pub viewport: Viewport,
    pub extra: Map<String, Value>,
}

impl Default for Capabilities {
    fn default() -> Self {
        Capabilities {
            browser_name: "chrome".into(),
            headless: true,
            viewport: Viewport {
                width: 1024,
                height: 768,
            },
            extra: Map::new(),
        }
    }
}

impl Capabilities {
    /// The `POST /session` body.
    pub fn to_w3c(&self) -> Value {
        let Viewport { width, height } = self.viewport;
        let mut always = Map::new();
        always.insert("browserName".into(), json!(self.browser_name));
        match self.browser_name.as_str() {
            "firefox" => {
                let mut args = vec![format!("--width={width}"), format!("--height={height}")];
                if self.headless {
                    args.insert(0, "-headless".into());
                }
                always.insert("moz:firefoxOptions".into(), json!({ "args": args }));
            }
            _ => {
                let mut args = vec![format!("--window-size={width},{height}")];
                if self.headless {
                    args.insert(0, "--headless=new".into());
                }
                always.insert("goog:chromeOptions".into(), json!({ "args": args }));
            }
        }
        for (k, v) in &self.extra {
            always.insert(k.clone(), v.clone());
        }
        json!({ "capabilities": { "alwaysMatch": always, "firstMatch": [{}] } })
    }
}

/// Where the WebDriver server lives and how long to wait for it.
#[derive(Debug, Clone)]
pub struct DriverEndpoint {
    base_url: String,
    agent: ureq::Agent,
}

impl DriverEndpoint {
    pub fn new(base_url: &str) -> Self {
        Self::with_timeouts(
            base_url,
            Duration::from_millis(DEFAULT_CONNECT_TIMEOUT_MS),
            Duration::from_millis(DEFAULT_REQUEST_TIMEOUT_MS),
        )
    }

    pub fn with_timeouts(base_url: &str, connect: Duration, request: Duration) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(connect)
            .timeout(request)
            .build();
        DriverEndpoint {
            base_url: base_url.trim_end_matches('/').to_string(),
            agent,
        }
    }

    /// Reads the base URL from `VIZGRADE_WEBDRIVER_URL`.
    pub fn from_env() -> Option<Self> {
        std::env::var(WEBDRIVER_URL_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .map(|s| Self::new(s.trim()))
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn new_session(&self, caps: &Capabilities) -> Result<Session, WireError> {
        let value = match self.call("POST", "/session", Some(caps.to_w3c()), None) {
            Err(WireError::DriverError { error, message, .. }) if error == "session not created" => {
                return Err(WireError::SessionNotCreated(message))
            }
            other => other?,
        };
        let id = value
            .get("sessionId")
            .and_then(Value::as_str)
            .ok_or_else(|| WireError::DecodeError("new session response has no sessionId".into()))?
            .to_string();
        let capabilities = value.get("capabilities").cloned().unwrap_or(Value::Null);
        log::debug!("opened WebDriver session {id}");
        Ok(Session {
            endpoint: self.clone(),
            id,
            capabilities,
        })
    }

    /// One request, no retries. Returns the `value` member of the reply.
    fn call(
        &self,
        method: &str,
        path: &str,
        body: Option<Value>,
        session: Option<&str>,
    ) -> Result<Value, WireError> {
        let url = format!("{}{}", self.base_url, path);
        let req = self.agent.request(method, &url);
        let result = match body {
            Some(b) => req.send_json(b),
            None => req.call(),
        };
        match result {
            Ok(resp) => {
                let doc: Value = resp
                    .into_json()
                    .map_err(|e| WireError::DecodeError(format!("{method} {path}: {e}")))?;
                Ok(doc.get("value").cloned().unwrap_or(Value::Null))
            }
            Err(ureq::Error::Status(status, resp)) => {
                let doc: Value = resp.into_json().unwrap_or(Value::Null);
                let v = doc.get("value").unwrap_or(&Value::Null);
                let error = v
                    .get("error")
                    .and_then(Value::as_str)
                    .unwrap_or("unknown error")
                    .to_string();
                let message = v
                    .get("message")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string();
                if error == "invalid session id" {
                    return Err(WireError::StaleSession(session.unwrap_or_default().to_string()));
                }
                Err(WireError::DriverError {
                    status,
                    error,
                    message,
                })
            }
            Err(ureq::Error::Transport(t)) => {
                let reason = t.to_string();
                match t.kind() {
                    ureq::ErrorKind::ConnectionFailed
                    | ureq::ErrorKind::Dns
                    | ureq::ErrorKind::InvalidUrl
                    | ureq::ErrorKind::UnknownScheme => Err(WireError::ConnectionFailed {
                        url: self.base_url.clone(),
                        reason,
                    }),
                    ureq::ErrorKind::Io if is_timeout(&reason) => {
                        Err(WireError::RequestTimeout(format!("{method} {path}")))
                    }
                    _ => Err(WireError::ConnectionFailed {
                        url: self.base_url.clone(),
                        reason,
                    }),
                }
            }
        }
    }
}

fn is_timeout(reason: &str) -> bool {
    let r = reason.to_ascii_lowercase();
    r.contains("timed out") || r.contains("timeout") || r.contains("would block")
}

/// An open browser session.
#[derive(Debug)]
pub struct Session {
    endpoint: DriverEndpoint,
    id: String,
    capabilities: Value,
}

impl Session {
    pub fn id(&self) -> &str {
        &self.id
    }

    /// Capabilities the driver reported when the session was created.
    pub fn capabilities(&self) -> &Value {
        &self.capabilities
    }

    fn call(&self, method: &str, suffix: &str, body: Option<Value>) -> Result<Value, WireError> {
        let path = format!("/session/{}{}", self.id, suffix);
        self.endpoint.call(method, &path, body, Some(&self.id))
    }

    pub fn delete(self) -> Result<(), WireError> {
        self.call("DELETE", "", None).map(|_| ())
    }

    pub fn navigate(&self, url: &str) -> Result<(), WireError> {
        match self.call("POST", "/url", Some(json!({ "url": url }))) {
            Ok(_) => Ok(()),
            Err(WireError::DriverError { error, .. }) if error == "timeout" => {
                Err(WireError::NavigationTimeout(url.to_string()))
            }
            Err(WireError::RequestTimeout(_)) => Err(WireError::NavigationTimeout(url.to_string())),
            Err(e) => Err(e),
        }
    }

    pub fn execute_script(&self, script: &str, args: &[Value]) -> Result<Value, WireError> {
        let body = json!({ "script": script, "args": args });
        match self.call("POST", "/execute/sync", Some(body)) {
            Err(WireError::DriverError { error, message, .. }) if error == "javascript error" => {
                Err(WireError::ScriptError(message))
            }
            other => other,
        }
    }

    /// Sends the sequence; an empty sequence is a no-op.
    pub fn perform_actions(&self, seq: &ActionSequence) -> Result<(), WireError> {
        if seq.is_empty() {
            return Ok(());
        }
        let body = seq.encode()?;
        self.call("POST", "/actions", Some(body)).map(|_| ())
    }

    pub fn release_actions(&self) -> Result<(), WireError> {
        self.call("DELETE", "/actions", None).map(|_| ())
    }

    /// PNG bytes of the current viewport.
    pub fn take_screenshot(&self) -> Result<Vec<u8>, WireError> {
        let v = self.call("GET", "/screenshot", None)?;
        let b64 = v
            .as_str()
            .ok_or_else(|| WireError::DecodeError("screenshot value is not a string".into()))?;
        base64::engine::general_purpose::STANDARD
            .decode(b64.trim())
            .map_err(|e| WireError::DecodeError(format!("screenshot base64: {e}")))
    }
}

/// Width and height from a PNG header.
pub fn png_dimensions(bytes: &[u8]) -> Result<(u32, u32), WireError> {
    let decoder = png::Decoder::new(bytes);
    let reader = decoder
        .read_info()
        .map_err(|e| WireError::DecodeError(format!("png: {e}")))?;
    let info = reader.info();
    Ok((info.width, info.height))
}
