//! GHG scope breakdown for one tenant in one data center.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::units::{EmissionsG, EnergyWh};

/// The four Scope 2 energy sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope2Category {
    Server,
    Network,
    Cooling,
    Other,
}

impl Scope2Category {
    pub const ALL: [Scope2Category; 4] =
        [Scope2Category::Server, Scope2Category::Network, Scope2Category::Cooling, Scope2Category::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Scope2Category::Server => "server",
            Scope2Category::Network => "network",
            Scope2Category::Cooling => "cooling",
            Scope2Category::Other => "other",
        }
    }
}

impl fmt::Display for Scope2Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentTotal {
    pub energy: EnergyWh,
    pub emissions: EmissionsG,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScopeBreakdown {
    pub scope1: EmissionsG,
    pub scope2: EmissionsG,
    pub scope3: EmissionsG,
    pub scope2_components: BTreeMap<Scope2Category, ComponentTotal>,
}

impl ScopeBreakdown {
    pub fn component(&self, category: Scope2Category) -> ComponentTotal {
        self.scope2_components.get(&category).copied().unwrap_or_default()
    }

    pub fn scope2_energy(&self) -> EnergyWh {
        Scope2Category::ALL.iter().map(|c| self.component(*c).energy).sum()
    }

    /// Relative gap between `scope2` and the sum of its component emissions.
    pub fn component_residual(&self) -> f64 {
        let sum: EmissionsG = Scope2Category::ALL.iter().map(|c| self.component(*c).emissions).sum();
        relative_residual(sum.value(), self.scope2.value())
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn relative_residual(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_of_zeros_is_zero() {
        assert_eq!(relative_residual(0.0, 0.0), 0.0);
        assert_eq!(relative_residual(1.0, 1.0), 0.0);
        assert!((relative_residual(2.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn missing_components_read_as_zero() {
        let b = ScopeBreakdown::default();
        assert_eq!(b.component(Scope2Category::Cooling), ComponentTotal::default());
        assert_eq!(b.scope2_energy(), EnergyWh::ZERO);
        assert_eq!(b.component_residual(), 0.0);
    }
}
