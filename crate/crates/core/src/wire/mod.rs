//! A small synchronous WebDriver client covering the commands the grader
//! needs, plus an in-process mock server for tests.

mod actions;
mod client;
pub mod mock;

pub use actions::{Action, ActionSequence, InputSource, Origin, SourceKind};
pub use client::{png_dimensions, Capabilities, DriverEndpoint, Session};

use thiserror::Error;

/// Environment variable naming the WebDriver base URL.
pub const WEBDRIVER_URL_ENV: &str = "VIZGRADE_WEBDRIVER_URL";
pub const DEFAULT_CONNECT_TIMEOUT_MS: u64 = 5_000;
pub const DEFAULT_REQUEST_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WireError {
    #[error("cannot reach WebDriver at {url}: {reason}")]
    ConnectionFailed { url: String, reason: String },
    #[error("driver rejected the session request: {0}")]
    SessionNotCreated(String),
    #[error("WebDriver request timed out: {0}")]
    RequestTimeout(String),
    #[error("WebDriver error {status} {error}: {message}")]
    DriverError {
        status: u16,
        error: String,
        message: String,
    },
    #[error("session {0} is no longer valid")]
    StaleSession(String),
    #[error("navigation to {0} timed out")]
    NavigationTimeout(String),
    #[error("script error: {0}")]
    ScriptError(String),
    #[error("invalid action sequence: {0}")]
    InvalidSequence(String),
    #[error("cannot decode driver response: {0}")]
    DecodeError(String),
}
