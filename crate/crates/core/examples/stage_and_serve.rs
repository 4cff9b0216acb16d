//! Stages the fixture submission with its pinned library, serves it on a
//! loopback port and fetches a few paths, including a traversal attempt.
//!
//! cargo run --example stage_and_serve

use vizgrade::harness::{serve, stage_submission, SubmissionManifest};

fn main() -> anyhow::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart");
    let manifest = SubmissionManifest::load(&dir.join("manifest.json"))?;
    let mut site = stage_submission(&dir.join("submission"), &manifest)?;
    for (from, to) in &site.applied_rewrites {
        println!("rewrote {from} -> {to}");
    }
    let server = serve(&mut site)?;
    println!("serving {} at {}", server.root().display(), server.base_url());
    for path in ["index.html", "data.csv", "vendor/d3.v5.min.js", "%2e%2e/%2e%2e/etc/passwd", "missing.js"] {
        let url = format!("{}{path}", server.base_url());
        match ureq::get(&url).call() {
            Ok(resp) => println!("200 {path} ({})", resp.content_type()),
            Err(ureq::Error::Status(code, _)) => println!("{code} {path}"),
            Err(e) => println!("error {path}: {e}"),
        }
    }
    Ok(())
}
