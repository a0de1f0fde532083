use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{EmissionsG, Period};

/// Gross and net totals of a prior period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub period: Period,
    pub gross: EmissionsG,
    pub net: EmissionsG,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("history entry {}: {reason}", path.display())]
pub struct HistoryError {
    pub path: PathBuf,
    pub reason: String,
}

/// Read access to footprints of earlier periods.
pub trait HistorySource {
    /// Entries strictly before `period`, most recent first.
    fn entries_before(&self, tenant_id: &str, period: Period) -> Result<Vec<HistoryEntry>, HistoryError>;

    /// The two most recent entries before `period`.
    fn prior(&self, tenant_id: &str, period: Period) -> Result<Vec<HistoryEntry>, HistoryError> {
        let mut entries = self.entries_before(tenant_id, period)?;
        entries.truncate(2);
        Ok(entries)
    }
}

/// An empty store.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoHistory;

impl HistorySource for NoHistory {
    fn entries_before(&self, _: &str, _: Period) -> Result<Vec<HistoryEntry>, HistoryError> {
        Ok(Vec::new())
    }
}

/// In-memory store keyed by tenant and period.
#[derive(Debug, Clone, Default)]
pub struct MemoryHistory {
    entries: BTreeMap<(String, Period), HistoryEntry>,
}

impl MemoryHistory {
    pub fn insert(&mut self, tenant_id: &str, entry: HistoryEntry) {
        self.entries.insert((tenant_id.to_string(), entry.period), entry);
    }
}

impl HistorySource for MemoryHistory {
    fn entries_before(&self, tenant_id: &str, period: Period) -> Result<Vec<HistoryEntry>, HistoryError> {
        Ok(self.entries.iter().rev().filter(|((t, p), _)| t == tenant_id && *p < period).map(|(_, e)| *e).collect())
    }
}
