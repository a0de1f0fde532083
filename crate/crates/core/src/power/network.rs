//! Byte-count network energy model: a fixed 6×10⁻⁸ Wh per byte passing
//! through a device, attributed per tenant via its ports.

use crate::ingest::NetworkUsageRow;
use crate::units::EnergyWh;

/// Watt-hours per byte, as `WH_PER_BYTE_NUMERATOR / WH_PER_BYTE_DENOMINATOR`.
pub const WH_PER_BYTE: f64 = 6e-8;
const WH_PER_BYTE_NUMERATOR: f64 = 6.0;
const WH_PER_BYTE_DENOMINATOR: f64 = 1e8;

/// Energy attributed to one tenant's traffic through one device.
///
/// Computed as `bytes × 6 / 10⁸` rather than `bytes × 6e-8`: the constant
/// 6e-8 has no exact binary representation, and the division form is exact
/// whenever the result is representable (e.g. 2×10¹² bytes → 120000 Wh).
///
/// ```
/// use tcf_core::ingest::NetworkUsageRow;
/// use tcf_core::power::estimate_network_energy;
///
/// let row = NetworkUsageRow {
///     datacenter_id: "DC_EU1".into(),
///     device_id: "NETWORK_DEVICE_1234".into(),
///     device_type: "router".into(),
///     tenant_id: "TENANT_X".into(),
///     bytes_sent: 1_000_000_000_000,
///     bytes_received: 1_000_000_000_000,
///     line: 0,
/// };
/// assert_eq!(estimate_network_energy(&row).value(), 120_000.0);
/// ```
pub fn estimate_network_energy(row: &NetworkUsageRow) -> EnergyWh {
    network_energy_for_bytes(row.bytes_sent as u128 + row.bytes_received as u128)
}

pub fn network_energy_for_bytes(bytes: u128) -> EnergyWh {
    let wh = bytes as f64 * WH_PER_BYTE_NUMERATOR / WH_PER_BYTE_DENOMINATOR;
    EnergyWh::new(wh).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(sent: u64, received: u64) -> NetworkUsageRow {
        NetworkUsageRow {
            datacenter_id: "DC".into(),
            device_id: "R".into(),
            device_type: "router".into(),
            tenant_id: "T".into(),
            bytes_sent: sent,
            bytes_received: received,
            line: 0,
        }
    }

    #[test]
    fn exact_values() {
        assert_eq!(estimate_network_energy(&row(1_000_000_000_000, 1_000_000_000_000)).value(), 120_000.0);
        assert_eq!(estimate_network_energy(&row(0, 0)).value(), 0.0);
        assert_eq!(estimate_network_energy(&row(500_000_000, 500_000_000)).value(), 60.0);
    }

    #[test]
    fn constant_matches_ratio() {
        assert_eq!(WH_PER_BYTE_NUMERATOR / WH_PER_BYTE_DENOMINATOR, WH_PER_BYTE);
    }

    #[test]
    fn no_overflow_at_u64_max() {
        let e = estimate_network_energy(&row(u64::MAX, u64::MAX));
        assert!(e.value().is_finite() && e.value() > 0.0);
    }

    proptest! {
        #[test]
        fn additive_in_bytes(a in 0u64..1u64 << 50, b in 0u64..1u64 << 50, c in 0u64..1u64 << 50, d in 0u64..1u64 << 50) {
            let whole = estimate_network_energy(&row(a + b, c + d)).value();
            let parts = estimate_network_energy(&row(a, c)).value() + estimate_network_energy(&row(b, d)).value();
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1e-300) + 1e-300);
        }
    }
}
