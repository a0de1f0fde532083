use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::json::history_entry;
use super::ReportDocument;
use crate::allocation::{HistoryEntry, HistoryError, HistorySource};
use crate::units::Period;

/// Prior-period JSON reports stored as `<root>/<tenant_id>/<YYYY-MM>.json`.
#[derive(Debug, Clone)]
pub struct FsHistoryStore {
    root: PathBuf,
}

impl FsHistoryStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FsHistoryStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Stores a JSON report, replacing any earlier one for the same period.
    pub fn store(&self, doc: &ReportDocument) -> io::Result<PathBuf> {
        let path = self.root.join(doc.relative_path());
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, &doc.content)?;
        Ok(path)
    }
}

impl FsHistoryStore {
    /// Report files for periods before `period`, most recent first.
    fn files_before(&self, tenant_id: &str, period: Period) -> Result<Vec<(Period, PathBuf)>, HistoryError> {
        let dir = self.root.join(tenant_id);
        let listing = match fs::read_dir(&dir) {
            Ok(l) => l,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(error(&dir, e.to_string())),
        };
        let mut found = Vec::new();
        for item in listing {
            let path = item.map_err(|e| error(&dir, e.to_string()))?.path();
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let Ok(p) = stem.parse::<Period>() else { continue };
            if path.extension().is_some_and(|x| x == "json") && p < period {
                found.push((p, path));
            }
        }
        found.sort_by_key(|f| std::cmp::Reverse(f.0));
        Ok(found)
    }
}

fn error(path: &Path, reason: String) -> HistoryError {
    HistoryError { path: path.to_path_buf(), reason }
}

fn read_entry(period: Period, path: &Path) -> Result<HistoryEntry, HistoryError> {
    let content = fs::read(path).map_err(|e| error(path, e.to_string()))?;
    let entry = history_entry(&content).map_err(|e| error(path, e.to_string()))?;
    if entry.period != period {
        return Err(error(path, format!("file holds period {}", entry.period)));
    }
    Ok(entry)
}

impl HistorySource for FsHistoryStore {
    fn entries_before(&self, tenant_id: &str, period: Period) -> Result<Vec<HistoryEntry>, HistoryError> {
        self.files_before(tenant_id, period)?.iter().map(|(p, path)| read_entry(*p, path)).collect()
    }

    fn prior(&self, tenant_id: &str, period: Period) -> Result<Vec<HistoryEntry>, HistoryError> {
        self.files_before(tenant_id, period)?.iter().take(2).map(|(p, path)| read_entry(*p, path)).collect()
    }
}
