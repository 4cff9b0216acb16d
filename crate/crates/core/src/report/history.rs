use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::format_number;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub timestamp: DateTime<Utc>,
    pub total: f64,
}

/// Totals of one submitter's successive submissions, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistory {
    pub submission_id: String,
    pub entries: Vec<HistoryEntry>,
}

impl ScoreHistory {
    pub fn new(submission_id: impl Into<String>) -> Self {
        ScoreHistory {
            submission_id: submission_id.into(),
            entries: Vec::new(),
        }
    }

    /// Appends an entry; timestamps must not go backwards.
    pub fn push(&mut self, timestamp: DateTime<Utc>, total: f64) -> Result<(), ReportError> {
        if let Some(last) = self.entries.last() {
            if timestamp < last.timestamp {
                return Err(ReportError::Io(format!(
                    "history entry at {timestamp} precedes {}",
                    last.timestamp
                )));
            }
        }
        self.entries.push(HistoryEntry { timestamp, total });
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let bytes = std::fs::read(path).map_err(|e| ReportError::Io(format!("{}: {e}", path.display())))?;
        let h: ScoreHistory =
            serde_json::from_slice(&bytes).map_err(|e| ReportError::Io(format!("{}: {e}", path.display())))?;
        if h.entries.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err(ReportError::Io(format!("{}: timestamps out of order", path.display())));
        }
        Ok(h)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReportError> {
        let bytes = serde_json::to_vec_pretty(self).expect("history serializes");
        std::fs::write(path, bytes).map_err(|e| ReportError::Io(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyFlag {
    pub submission_id: String,
    pub final_total: f64,
    pub prior_max: f64,
    pub message: String,
}

/// Flags a history whose final total is strictly below the best earlier
/// total.
pub fn flag_anomalies(history: &ScoreHistory) -> Vec<AnomalyFlag> {
    let Some((last, prior)) = history.entries.split_last() else {
        return Vec::new();
    };
    let prior_max = prior.iter().map(|e| e.total).fold(f64::NEG_INFINITY, f64::max);
    if last.total < prior_max {
        vec![AnomalyFlag {
            submission_id: history.submission_id.clone(),
            final_total: last.total,
            prior_max,
            message: format!(
                "final submission scored {} but an earlier one scored {}",
                format_number(last.total),
                format_number(prior_max)
            ),
        }]
    } else {
        Vec::new()
    }
}
