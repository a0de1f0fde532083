use std::fmt;

use serde::{Deserialize, Serialize};

use crate::allocation::{Footprint, HistoryEntry};
use crate::units::{EmissionsG, Period};

/// Change of the current gross against one prior period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendDelta {
    pub period: Period,
    pub gross: EmissionsG,
    pub net: EmissionsG,
    /// `None` when the prior gross is zero.
    pub pct_change: Option<f64>,
}

/// One delta per history entry, in history order (most recent first).
pub fn compute_trend(current: &Footprint, history: &[HistoryEntry]) -> Vec<TrendDelta> {
    history
        .iter()
        .map(|h| TrendDelta {
            period: h.period,
            gross: h.gross,
            net: h.net,
            pct_change: pct_change(current.gross_total, h.gross),
        })
        .collect()
}

fn pct_change(current: EmissionsG, prior: EmissionsG) -> Option<f64> {
    (prior.value() != 0.0).then(|| (current.value() - prior.value()) / prior.value() * 100.0)
}

/// Red/amber/green indicator for the month-on-month change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendBadge {
    Improving,
    Flat,
    Worsening,
}

impl TrendBadge {
    pub fn label(self) -> &'static str {
        match self {
            TrendBadge::Improving => "improving",
            TrendBadge::Flat => "flat",
            TrendBadge::Worsening => "worsening",
        }
    }

    pub fn color(self) -> &'static str {
        match self {
            TrendBadge::Improving => "#2e7d32",
            TrendBadge::Flat => "#f9a825",
            TrendBadge::Worsening => "#c62828",
        }
    }
}

impl fmt::Display for TrendBadge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Percent changes at or below `improving` or at or above `worsening`
/// leave the flat band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendThresholds {
    pub improving: f64,
    pub worsening: f64,
}

impl Default for TrendThresholds {
    fn default() -> Self {
        TrendThresholds { improving: -5.0, worsening: 5.0 }
    }
}

impl TrendThresholds {
    /// Badge for the most recent delta; `None` without a usable comparison.
    ///
    /// ```
    /// use tcf_core::report::{TrendBadge, TrendThresholds};
    /// let t = TrendThresholds::default();
    /// assert_eq!(t.classify(-10.0), TrendBadge::Improving);
    /// assert_eq!(t.classify(4.9), TrendBadge::Flat);
    /// assert_eq!(t.classify(5.0), TrendBadge::Worsening);
    /// ```
    pub fn badge(&self, deltas: &[TrendDelta]) -> Option<TrendBadge> {
        deltas.first().and_then(|d| d.pct_change).map(|p| self.classify(p))
    }

    pub fn classify(&self, pct: f64) -> TrendBadge {
        if pct <= self.improving {
            TrendBadge::Improving
        } else if pct >= self.worsening {
            TrendBadge::Worsening
        } else {
            TrendBadge::Flat
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn footprint(gross: f64) -> Footprint {
        Footprint {
            tenant_id: "T".into(),
            display_name: "T".into(),
            agent_count: 1,
            period: Period::new(2023, 3).unwrap(),
            per_dc: vec![],
            gross_total: EmissionsG::gross(gross).unwrap(),
            net_total: EmissionsG::gross(gross).unwrap(),
            per_agent: EmissionsG::gross(gross).unwrap(),
            history: vec![],
        }
    }

    fn entry(m: u8, gross: f64) -> HistoryEntry {
        HistoryEntry {
            period: Period::new(2023, m).unwrap(),
            gross: EmissionsG::gross(gross).unwrap(),
            net: EmissionsG::gross(gross).unwrap(),
        }
    }

    #[test]
    fn ten_percent_drop() {
        let d = compute_trend(&footprint(1_800_000.0), &[entry(2, 2_000_000.0)]);
        assert_eq!(d[0].pct_change, Some(-10.0));
        assert_eq!(TrendThresholds::default().badge(&d), Some(TrendBadge::Improving));
    }

    #[test]
    fn empty_history() {
        let d = compute_trend(&footprint(1.0), &[]);
        assert!(d.is_empty());
        assert_eq!(TrendThresholds::default().badge(&d), None);
    }

    #[test]
    fn zero_prior_marked_unavailable() {
        let d = compute_trend(&footprint(5.0), &[entry(2, 0.0), entry(1, 10.0)]);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].pct_change, None);
        assert_eq!(d[1].pct_change, Some(-50.0));
        assert_eq!(TrendThresholds::default().badge(&d), None);
    }

    #[test]
    fn custom_thresholds() {
        let t = TrendThresholds { improving: -1.0, worsening: 1.0 };
        assert_eq!(t.classify(2.0), TrendBadge::Worsening);
        assert_eq!(t.classify(0.0), TrendBadge::Flat);
    }
}
