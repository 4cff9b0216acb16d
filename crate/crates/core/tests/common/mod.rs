#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart")
}

/// Raw request so nothing normalizes the path on the way out.
pub fn raw_get(base: &str, target: &str) -> (u16, Vec<u8>) {
    let addr = base.trim_start_matches("http://").trim_end_matches('/');
    let mut s = TcpStream::connect(addr).unwrap();
    write!(s, "GET {target} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).unwrap();
    let status = buf
        .get(9..12)
        .and_then(|c| std::str::from_utf8(c).ok())
        .and_then(|c| c.parse().ok())
        .unwrap_or(0);
    let body_at = buf.windows(4).position(|w| w == b"\r\n\r\n").map_or(buf.len(), |i| i + 4);
    (status, buf[body_at..].to_vec())
}

pub const TRAVERSAL_SEGMENTS: &[&str] = &[
    "..", "%2e%2e", "%2E%2E", ".%2e", "%2e.", "%252e%252e", "..%2f", "..%2F", "%2f", "", ".", "..\\", "%5c",
    "%5c..", "%00", "index.html", "vendor", "d3.v5.min.js", "data.csv", "secret.txt", "etc", "passwd", "link",
    "%c0%ae%c0%ae", "..;", "~", "%2e%2e%5c",
];
