//! In-page scripts run through `execute_script`.

/// Returns a scene snapshot document for the subtree under `arguments[0]`,
/// or `{error: "RootNotFound"}`.
pub const PROBE_SCRIPT: &str = include_str!("../assets/probe.js");

/// Returns an object mapping each selector in `arguments[0]` to its match
/// count, used for render-readiness polling.
pub const COUNT_SCRIPT: &str = "/* vizgrade:count */\n\
var sels = arguments[0] || [];\n\
var out = {};\n\
sels.forEach(function (s) { out[s] = document.querySelectorAll(s).length; });\n\
return out;";

pub const PROBE_MARKER: &str = "vizgrade:probe";
pub const COUNT_MARKER: &str = "vizgrade:count";

/// Loads a replacement probe from `VIZGRADE_PROBE_SCRIPT` when set.
pub fn probe_script() -> std::borrow::Cow<'static, str> {
    match std::env::var("VIZGRADE_PROBE_SCRIPT") {
        Ok(path) if !path.is_empty() => match std::fs::read_to_string(&path) {
            Ok(s) => std::borrow::Cow::Owned(s),
            Err(e) => {
                log::warn!("cannot read probe override {path}: {e}; using the embedded probe");
                std::borrow::Cow::Borrowed(PROBE_SCRIPT)
            }
        },
        _ => std::borrow::Cow::Borrowed(PROBE_SCRIPT),
    }
}
