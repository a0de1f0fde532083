//! Unit-bearing scalars shared by every pipeline stage.
//!
//! Energy is always Watt-hours, emissions are always grams of CO₂-equivalent.
//! Gross quantities are validated non-negative at construction; only net
//! emission figures may drop below zero.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("{quantity} must be finite, got {value}")]
    NotFinite { quantity: &'static str, value: f64 },
    #[error("{quantity} must be non-negative, got {value}")]
    Negative { quantity: &'static str, value: f64 },
    #[error("share must lie in [0, 1], got {0}")]
    ShareOutOfRange(f64),
    #[error("invalid period {0:?}, expected YYYY-MM")]
    BadPeriod(String),
}

fn non_negative(quantity: &'static str, value: f64) -> Result<f64, UnitError> {
    if !value.is_finite() {
        return Err(UnitError::NotFinite { quantity, value });
    }
    if value < 0.0 {
        return Err(UnitError::Negative { quantity, value });
    }
    // normalise -0.0 so serialised output never shows a signed zero
    Ok(value + 0.0)
}

/// Energy in Watt-hours. Never negative.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct EnergyWh(f64);

impl EnergyWh {
    pub const ZERO: EnergyWh = EnergyWh(0.0);

    pub fn new(value: f64) -> Result<Self, UnitError> {
        non_negative("energy", value).map(EnergyWh)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Multiplies by a non-negative dimensionless factor.
    pub fn scale(self, factor: f64) -> EnergyWh {
        debug_assert!(factor >= 0.0);
        EnergyWh((self.0 * factor).max(0.0))
    }
}

impl<'de> Deserialize<'de> for EnergyWh {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        EnergyWh::new(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Add for EnergyWh {
    type Output = EnergyWh;
    fn add(self, rhs: EnergyWh) -> EnergyWh {
        EnergyWh(self.0 + rhs.0)
    }
}

impl AddAssign for EnergyWh {
    fn add_assign(&mut self, rhs: EnergyWh) {
        self.0 += rhs.0;
    }
}

impl Sum for EnergyWh {
    fn sum<I: Iterator<Item = EnergyWh>>(iter: I) -> EnergyWh {
        iter.fold(EnergyWh::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a EnergyWh> for EnergyWh {
    fn sum<I: Iterator<Item = &'a EnergyWh>>(iter: I) -> EnergyWh {
        iter.copied().sum()
    }
}

impl Mul<CarbonIntensity> for EnergyWh {
    type Output = EmissionsG;
    fn mul(self, rhs: CarbonIntensity) -> EmissionsG {
        emissions_from_energy(self, rhs)
    }
}

impl fmt::Display for EnergyWh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Wh", self.0)
    }
}

/// Emissions in grams of CO₂-equivalent.
///
/// Gross values are constructed through [`EmissionsG::gross`] and are never
/// negative. [`EmissionsG::net`] admits negative values for over-offset
/// tenants.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmissionsG(f64);

impl EmissionsG {
    pub const ZERO: EmissionsG = EmissionsG(0.0);

    pub fn gross(value: f64) -> Result<Self, UnitError> {
        non_negative("gross emissions", value).map(EmissionsG)
    }

    pub fn net(value: f64) -> Result<Self, UnitError> {
        if !value.is_finite() {
            return Err(UnitError::NotFinite { quantity: "net emissions", value });
        }
        Ok(EmissionsG(value + 0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0.0
    }

    pub fn scale(self, factor: f64) -> EmissionsG {
        EmissionsG(self.0 * factor)
    }
}

impl Add for EmissionsG {
    type Output = EmissionsG;
    fn add(self, rhs: EmissionsG) -> EmissionsG {
        EmissionsG(self.0 + rhs.0)
    }
}

impl AddAssign for EmissionsG {
    fn add_assign(&mut self, rhs: EmissionsG) {
        self.0 += rhs.0;
    }
}

impl Sub for EmissionsG {
    type Output = EmissionsG;
    fn sub(self, rhs: EmissionsG) -> EmissionsG {
        EmissionsG(self.0 - rhs.0)
    }
}

impl Mul<Share> for EmissionsG {
    type Output = EmissionsG;
    fn mul(self, rhs: Share) -> EmissionsG {
        EmissionsG(self.0 * rhs.0)
    }
}

impl Sum for EmissionsG {
    fn sum<I: Iterator<Item = EmissionsG>>(iter: I) -> EmissionsG {
        iter.fold(EmissionsG::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a EmissionsG> for EmissionsG {
    fn sum<I: Iterator<Item = &'a EmissionsG>>(iter: I) -> EmissionsG {
        iter.copied().sum()
    }
}

impl fmt::Display for EmissionsG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} gCO2e", self.0)
    }
}

/// Grams CO₂e per Watt-hour for electricity, or per gram of fuel for
/// combustion devices.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct CarbonIntensity(f64);

impl CarbonIntensity {
    pub fn new(value: f64) -> Result<Self, UnitError> {
        non_negative("carbon intensity", value).map(CarbonIntensity)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for CarbonIntensity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        CarbonIntensity::new(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// A dimensionless fraction in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Share(f64);

impl Share {
    pub const ZERO: Share = Share(0.0);
    pub const ONE: Share = Share(1.0);

    pub fn new(value: f64) -> Result<Self, UnitError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(UnitError::ShareOutOfRange(value));
        }
        Ok(Share(value + 0.0))
    }

    /// Builds a share from a ratio that may overshoot `[0, 1]` by rounding
    /// noise. Values within `1e-12` of the interval are clamped; anything
    /// further out is rejected.
    pub fn from_ratio(value: f64) -> Result<Self, UnitError> {
        const SLACK: f64 = 1e-12;
        if value.is_finite() && (-SLACK..=1.0 + SLACK).contains(&value) {
            Ok(Share(value.clamp(0.0, 1.0) + 0.0))
        } else {
            Err(UnitError::ShareOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Share {
    fn default() -> Self {
        Share::ONE
    }
}

impl Mul for Share {
    type Output = Share;
    fn mul(self, rhs: Share) -> Share {
        Share(self.0 * rhs.0)
    }
}

impl<'de> Deserialize<'de> for Share {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Share::new(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// A calendar month, the reporting granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period {
    year: i32,
    month: u8,
}

impl Period {
    pub fn new(year: i32, month: u8) -> Result<Self, UnitError> {
        if !(1..=12).contains(&month) || !(0..=9999).contains(&year) {
            return Err(UnitError::BadPeriod(format!("{year}-{month}")));
        }
        Ok(Period { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    pub fn previous(self) -> Period {
        if self.month == 1 {
            Period { year: self.year - 1, month: 12 }
        } else {
            Period { year: self.year, month: self.month - 1 }
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Period {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnitError::BadPeriod(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        Period::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Converts electrical energy to emissions with a carbon intensity.
///
/// ```
/// use tcf_core::units::{emissions_from_energy, CarbonIntensity, EnergyWh};
///
/// let e = EnergyWh::new(100_000.0).unwrap();
/// let c = CarbonIntensity::new(0.4).unwrap();
/// assert_eq!(emissions_from_energy(e, c).value(), 40_000.0);
/// ```
pub fn emissions_from_energy(e: EnergyWh, c: CarbonIntensity) -> EmissionsG {
    EmissionsG(e.0 * c.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wh(v: f64) -> EnergyWh {
        EnergyWh::new(v).unwrap()
    }

    fn ci(v: f64) -> CarbonIntensity {
        CarbonIntensity::new(v).unwrap()
    }

    #[test]
    fn listing_energy_emission_pairs() {
        assert_eq!(emissions_from_energy(wh(100_000.0), ci(0.4)).value(), 40_000.0);
        assert_eq!(emissions_from_energy(wh(4_500_000.0), ci(0.4)).value(), 1_800_000.0);
    }

    #[test]
    fn zero_energy_gives_zero_emissions() {
        assert_eq!(emissions_from_energy(EnergyWh::ZERO, ci(123.0)).value(), 0.0);
    }

    #[test]
    fn gross_values_reject_negatives() {
        assert!(EnergyWh::new(-1.0).is_err());
        assert!(EnergyWh::new(f64::NAN).is_err());
        assert!(EmissionsG::gross(-0.5).is_err());
        assert!(CarbonIntensity::new(-0.1).is_err());
        assert!(EmissionsG::net(-0.5).unwrap().is_negative());
    }

    #[test]
    fn share_bounds() {
        assert!(Share::new(1.5).is_err());
        assert!(Share::new(-0.01).is_err());
        assert_eq!(Share::from_ratio(1.0 + 1e-14).unwrap(), Share::ONE);
        assert!(Share::from_ratio(1.01).is_err());
        assert_eq!(Share::default(), Share::ONE);
    }

    #[test]
    fn period_parse_and_format() {
        let p: Period = "2023-01".parse().unwrap();
        assert_eq!(p.to_string(), "2023-01");
        assert_eq!(p.previous().to_string(), "2022-12");
        assert!("2023-13".parse::<Period>().is_err());
        assert!("2023-1".parse::<Period>().is_err());
        assert!("garbage".parse::<Period>().is_err());
        assert!(Period::new(2023, 0).is_err());
    }

    #[test]
    fn period_serde() {
        let p = Period::new(2024, 3).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "\"2024-03\"");
        assert_eq!(serde_json::from_str::<Period>(&s).unwrap(), p);
    }

    proptest! {
        #[test]
        fn conversion_is_linear_in_energy(e in 0.0f64..1e9, c in 0.0f64..10.0, k in 0.0f64..1e3) {
            let lhs = emissions_from_energy(wh(k * e), ci(c)).value();
            let rhs = k * emissions_from_energy(wh(e), ci(c)).value();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
        }

        #[test]
        fn conversion_is_linear_in_intensity(e in 0.0f64..1e9, c in 0.0f64..10.0, k in 0.0f64..1e3) {
            let lhs = emissions_from_energy(wh(e), ci(k * c)).value();
            let rhs = k * emissions_from_energy(wh(e), ci(c)).value();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
        }
    }
}
