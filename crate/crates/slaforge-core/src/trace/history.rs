//! Append-only, time-stamped history of metric values. The head (most
//! recent entry) is what the monitor reads.

use serde::{Deserialize, Serialize};

use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub time_ms: i64,
    pub key: String,
    pub value: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HistoryError {
    #[error("time regression: last entry at {last_ms} ms, attempted {attempted_ms} ms")]
    TimeRegression { last_ms: i64, attempted_ms: i64 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetricHistory {
    entries: Vec<HistoryEntry>,
}

impl MetricHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Appends an entry. Times must be non-decreasing.
    pub fn record(&mut self, time_ms: i64, key: &str, value: Rat) -> Result<(), HistoryError> {
        if let Some(last) = self.entries.last() {
            if time_ms < last.time_ms {
                return Err(HistoryError::TimeRegression {
                    last_ms: last.time_ms,
                    attempted_ms: time_ms,
                });
            }
        }
        self.entries.push(HistoryEntry {
            time_ms,
            key: key.to_string(),
            value,
        });
        Ok(())
    }

    /// Most recent entry.
    pub fn head(&self) -> Option<&HistoryEntry> {
        self.entries.last()
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn for_key<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a HistoryEntry> {
        self.entries.iter().filter(move |e| e.key == key)
    }

    pub fn latest_for_key(&self, key: &str) -> Option<&HistoryEntry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    /// One JSON object per line, in recording order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("history entry serializes"));
            out.push('\n');
        }
        out
    }
}
