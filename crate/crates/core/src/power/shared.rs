//! Proportional split of shared (cooling and other) device energy.

use thiserror::Error;

use crate::ingest::DeviceEnergy;
use crate::units::EnergyWh;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShareError {
    #[error("shared energy {shared} cannot be allocated: no tenant has directly attributable energy")]
    ZeroDenominator { shared: EnergyWh },
    #[error("tenant direct energy {tenant} exceeds the data center total {all}")]
    TenantExceedsTotal { tenant: EnergyWh, all: EnergyWh },
}

/// Fraction of shared energy owed by a tenant: its directly attributable
/// (server + network) energy over all tenants' direct energy.
pub fn shared_energy_ratio(tenant_direct: EnergyWh, all_tenants_direct: EnergyWh) -> Result<f64, ShareError> {
    let (t, all) = (tenant_direct.value(), all_tenants_direct.value());
    if t > all * (1.0 + 1e-12) {
        return Err(ShareError::TenantExceedsTotal { tenant: tenant_direct, all: all_tenants_direct });
    }
    if all == 0.0 {
        return Ok(0.0);
    }
    Ok((t / all).min(1.0))
}

/// Allocates the summed energy of `total_shared` devices to one tenant.
///
/// ```
/// use tcf_core::ingest::DeviceEnergy;
/// use tcf_core::power::allocate_shared_energy;
/// use tcf_core::units::EnergyWh;
///
/// let wh = |v| EnergyWh::new(v).unwrap();
/// let crac = [DeviceEnergy { device_id: "CRAC_1".into(), energy: wh(10_000.0) }];
/// let share = allocate_shared_energy(&crac, wh(2_500.0), wh(10_000.0)).unwrap();
/// assert_eq!(share.value(), 2_500.0);
/// ```
pub fn allocate_shared_energy(
    total_shared: &[DeviceEnergy],
    tenant_direct: EnergyWh,
    all_tenants_direct: EnergyWh,
) -> Result<EnergyWh, ShareError> {
    let shared: EnergyWh = total_shared.iter().map(|d| d.energy).sum();
    if all_tenants_direct.value() == 0.0 && shared.value() > 0.0 {
        return Err(ShareError::ZeroDenominator { shared });
    }
    let ratio = shared_energy_ratio(tenant_direct, all_tenants_direct)?;
    Ok(shared.scale(ratio))
}
