use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::EmissionsG;

/// Grams CO₂e per everyday activity, used to put a footprint in perspective.
///
/// There are no defaults. Operators supply the factors together with a note
/// naming where they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalencyFactors {
    /// One one-way economy flight, Amsterdam to New York, per passenger.
    pub flight_ams_nyc: f64,
    /// One kilometer driven by an average passenger car.
    pub car_km: f64,
    /// One full smartphone charge.
    pub smartphone_charge: f64,
    pub source_note: String,
}

#[derive(Debug, Error)]
pub enum EquivalencyError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid equivalency config: {0}")]
    Parse(String),
    #[error("equivalency factor `{name}` must be a positive finite number, got {value}")]
    NotPositive { name: &'static str, value: f64 },
}

impl EquivalencyFactors {
    pub fn new(
        flight_ams_nyc: f64,
        car_km: f64,
        smartphone_charge: f64,
        source_note: &str,
    ) -> Result<Self, EquivalencyError> {
        let f = EquivalencyFactors { flight_ams_nyc, car_km, smartphone_charge, source_note: source_note.into() };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), EquivalencyError> {
        for (name, value) in [
            ("flight_ams_nyc", self.flight_ams_nyc),
            ("car_km", self.car_km),
            ("smartphone_charge", self.smartphone_charge),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(EquivalencyError::NotPositive { name, value });
            }
        }
        Ok(())
    }

    /// Parses a TOML config with the three factors and `source_note`.
    ///
    /// ```
    /// use tcf_core::report::EquivalencyFactors;
    /// let f = EquivalencyFactors::from_toml_str(r#"
    ///     flight_ams_nyc = 900000.0
    ///     car_km = 180.0
    ///     smartphone_charge = 8.0
    ///     source_note = "test values"
    /// "#).unwrap();
    /// assert_eq!(f.car_km, 180.0);
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, EquivalencyError> {
        let f: EquivalencyFactors = toml::from_str(text).map_err(|e| EquivalencyError::Parse(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self, EquivalencyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| EquivalencyError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("plain struct serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equivalencies {
    pub flights: f64,
    pub car_km: f64,
    pub smartphone_charges: f64,
}

/// `gross / factor` for each activity.
pub fn compute_equivalencies(gross: EmissionsG, f: &EquivalencyFactors) -> Equivalencies {
    let g = gross.value();
    Equivalencies { flights: g / f.flight_ams_nyc, car_km: g / f.car_km, smartphone_charges: g / f.smartphone_charge }
}
