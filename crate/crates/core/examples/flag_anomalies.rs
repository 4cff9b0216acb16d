//! Records a run of submission scores and flags a final one that dropped.
//!
//! cargo run --example flag_anomalies

use chrono::{Duration, TimeZone, Utc};
use vizgrade::report::{flag_anomalies, ScoreHistory};

fn main() -> anyhow::Result<()> {
    let start = Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap();
    let mut history = ScoreHistory::new("student-42");
    for (hours, total) in [(0, 4.0), (2, 8.0), (5, 10.0), (9, 7.0)] {
        history.push(start + Duration::hours(hours), total)?;
    }
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("history.json");
    history.save(&path)?;
    let reloaded = ScoreHistory::load(&path)?;
    for e in &reloaded.entries {
        println!("{} {}", e.timestamp, e.total);
    }
    for flag in flag_anomalies(&reloaded) {
        println!("ANOMALY {}: {}", flag.submission_id, flag.message);
    }
    Ok(())
}
