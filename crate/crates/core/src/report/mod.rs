//! Per-tenant reports: a detailed JSON document and a one-page HTML summary,
//! both rendered from the same [`Footprint`](crate::allocation::Footprint).

mod canonical;
mod equivalency;
mod history;
mod json;
mod onepage;
mod trend;

use std::path::PathBuf;

use crate::units::Period;

pub use canonical::{canonical_bytes, canonicalize, diff_json, FieldDiff};
pub use equivalency::{compute_equivalencies, Equivalencies, EquivalencyError, EquivalencyFactors};
pub use history::FsHistoryStore;
pub use json::{parse_json, render_json, ParsedReport, ReportError, REPORT_SCHEMA_VERSION};
pub use onepage::{
    offset_slices, render_onepage, render_onepage_with, scope_slices, Slice, BLOCK_GAP_MM, PAGE_HEIGHT_MM,
    PAGE_WIDTH_MM,
};
pub use trend::{compute_trend, TrendBadge, TrendDelta, TrendThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    OnePage,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::OnePage => "html",
        }
    }
}

/// A rendered report for one tenant and period.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub tenant_id: String,
    pub period: Period,
    pub format: ReportFormat,
    pub content: Vec<u8>,
}

impl ReportDocument {
    /// `<tenant_id>/<YYYY-MM>.<ext>`
    pub fn relative_path(&self) -> PathBuf {
        PathBuf::from(&self.tenant_id).join(format!("{}.{}", self.period, self.format.extension()))
    }
}
