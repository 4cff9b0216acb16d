//! Replays the recorded hover interaction and shows what changed between
//! the captures.
//!
//! cargo run --example replay_interaction

use vizgrade::interact::{diff_scenes, grade_interaction, ScriptedPlayer};
use vizgrade::report::load_snapshot_sequence;
use vizgrade::rubric::expr::Scope;
use vizgrade::rubric::load_rubric_file;

fn main() -> anyhow::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bar_chart");
    let rubric = load_rubric_file(&dir.join("rubric.json"))?;
    let rows = rubric.load_dataset()?;
    for variant in ["correct", "tooltip_never_shown"] {
        let seq = load_snapshot_sequence(&dir.join(variant))?;
        for spec in &rubric.interactions {
            let Some(recording) = seq.interactions.get(&spec.id) else { continue };
            if let [before, .., after] = recording.as_slice() {
                let diff = diff_scenes(before, after);
                println!("{variant}/{}: {}", spec.id, diff.summary(before, after));
            }
            let mut player = ScriptedPlayer::new(recording.clone());
            let result = grade_interaction(spec, &mut player, &Scope::new(&rows));
            if result.passed {
                println!("  PASS");
            } else {
                println!("  FAIL: {}", result.feedback);
            }
            for seq in player.acted() {
                println!("  sent {}", seq.encode()?);
            }
        }
    }
    Ok(())
}
