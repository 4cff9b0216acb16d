//! Extracts the bars of a chart, binds them to the dataset and infers the
//! scale behind each encoding.
//!
//! cargo run --example infer_scales

use vizgrade::deconstruct::{bind_data, extract_group, infer_scale, scale_pairs, InferenceConfig, KeySpec};
use vizgrade::rubric::load_dataset_file;
use vizgrade::scene::parse_snapshot;

fn main() -> anyhow::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart");
    let scene = parse_snapshot(&std::fs::read(dir.join("correct/00-base.scene.json"))?)?;
    let rows = load_dataset_file(&dir.join("data.csv"))?;

    let group = extract_group(&scene, "#bars rect")?;
    let binding = bind_data(&group, &rows, &KeySpec::Field("name".into()))?;
    println!(
        "{} marks, {} rows missing, {} extra marks",
        group.marks.len(),
        binding.report.missing.len(),
        binding.report.extra.len()
    );
    for (field, channel) in [("value", "height"), ("value", "y"), ("name", "x"), ("name", "fill")] {
        let pairs = scale_pairs(&group, &binding, &rows, field, channel);
        match infer_scale(&pairs, field, channel, &InferenceConfig::default()) {
            Ok(model) => println!("{field} -> {channel}: {}", serde_json::to_string(&model)?),
            Err(e) => println!("{field} -> {channel}: {e}"),
        }
    }
    Ok(())
}
