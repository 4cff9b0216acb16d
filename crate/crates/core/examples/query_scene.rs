//! Runs selector queries against a recorded scene.
//!
//! cargo run --example query_scene -- [scene.json] [selector...]

use std::path::Path;

use vizgrade::scene::{parse_snapshot, query};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| {
        format!("{}/fixtures/bar_chart/correct/00-base.scene.json", env!("CARGO_MANIFEST_DIR"))
    });
    let mut selectors: Vec<String> = args.collect();
    if selectors.is_empty() {
        selectors = vec!["svg".into(), "#bars rect".into(), "rect.bar".into(), "g.x-axis .tick text".into()];
    }
    let scene = parse_snapshot(&std::fs::read(Path::new(&path))?)?;
    println!("{} elements in {path}", scene.len());
    for sel in &selectors {
        let hits = query(&scene, sel)?;
        println!("{sel:?}: {} match(es)", hits.len());
        for r in hits.iter().take(3) {
            println!("  {}", scene.describe(*r));
        }
    }
    Ok(())
}
