use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use percent_encoding::percent_decode_str;
use tiny_http::{Header, Response, Server};

use super::{HarnessError, StagedSite};

const WORKERS: usize = 4;

/// Content type by file extension.
pub fn media_type(path: &Path) -> &'static str {
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "csv" => "text/csv; charset=utf-8",
        "tsv" => "text/tab-separated-values; charset=utf-8",
        "txt" => "text/plain; charset=utf-8",
        "json" | "geojson" | "topojson" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "gif" => "image/gif",
        "woff" => "font/woff",
        "woff2" => "font/woff2",
        _ => "application/octet-stream",
    }
}

/// Maps a request target to a file under `root` (already canonical), or
/// `None` for anything that is missing, not a regular file, or resolves
/// outside the root.
pub(crate) fn resolve_request(root: &Path, url: &str) -> Option<PathBuf> {
    let path = url.split(['?', '#']).next().unwrap_or_default();
    let decoded = percent_decode_str(path).decode_utf8().ok()?;
    if decoded.contains('\0') || decoded.contains('\\') {
        return None;
    }
    let mut rel = PathBuf::new();
    for seg in decoded.split('/') {
        match seg {
            "" | "." => {}
            ".." => return None,
            s => rel.push(s),
        }
    }
    let mut candidate = root.join(&rel);
    if decoded.ends_with('/') || rel.as_os_str().is_empty() {
        candidate = candidate.join("index.html");
    }
    let canonical = candidate.canonicalize().ok()?;
    (canonical.starts_with(root) && canonical.is_file()).then_some(canonical)
}

/// Static file server over a staged site; stops on drop.
pub struct SiteServer {
    base_url: String,
    root: PathBuf,
    server: Arc<Server>,
    served: Arc<Mutex<Vec<PathBuf>>>,
    workers: Vec<JoinHandle<()>>,
}

impl SiteServer {
    /// `http://127.0.0.1:<port>/`
    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Every file the server opened, canonical.
    pub fn served_paths(&self) -> Vec<PathBuf> {
        self.served.lock().unwrap().clone()
    }
}

impl Drop for SiteServer {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

/// Serves `site.root_dir` on an ephemeral loopback port and records the
/// base URL on the site.
pub fn serve(site: &mut StagedSite) -> Result<SiteServer, HarnessError> {
    let root = site
        .root_dir
        .canonicalize()
        .map_err(|e| HarnessError::Io(format!("{}: {e}", site.root_dir.display())))?;
    let server = Server::http("127.0.0.1:0").map_err(|e| HarnessError::BindFailure(e.to_string()))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| HarnessError::BindFailure("not an IP listener".into()))?;
    let server = Arc::new(server);
    let served = Arc::new(Mutex::new(Vec::new()));
    let workers = (0..WORKERS)
        .map(|_| {
            let server = Arc::clone(&server);
            let served = Arc::clone(&served);
            let root = root.clone();
            std::thread::spawn(move || {
                while let Ok(req) = server.recv() {
                    let method = req.method().as_str().to_string();
                    if method != "GET" && method != "HEAD" {
                        let _ = req.respond(Response::from_string("method not allowed").with_status_code(405));
                        continue;
                    }
                    let found = resolve_request(&root, req.url())
                        .and_then(|p| fs::read(&p).ok().map(|bytes| (p, bytes)));
                    match found {
                        Some((path, bytes)) => {
                            served.lock().unwrap().push(path.clone());
                            let header = Header::from_bytes("Content-Type", media_type(&path))
                                .expect("static header");
                            let _ = req.respond(Response::from_data(bytes).with_header(header));
                        }
                        None => {
                            let _ = req.respond(Response::from_string("not found").with_status_code(404));
                        }
                    }
                }
            })
        })
        .collect();
    let base_url = format!("http://{addr}/");
    site.base_url = Some(base_url.clone());
    Ok(SiteServer {
        base_url,
        root,
        server,
        served,
        workers,
    })
}
