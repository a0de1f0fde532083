use std::collections::BTreeSet;

use super::{AllocationError, NetworkContribution, ServerContribution, SharedContribution, TenantDcScope2};
use crate::ingest::{DataCenterRecord, DeviceEnergy, RawData};
use crate::power::{
    allocate_shared_energy, estimate_network_energy, estimate_server_energy, shared_energy_ratio, ModelSet, ShareError,
};
use crate::scope::Scope2Category;
use crate::units::{EmissionsG, EnergyWh, Share};

/// Electricity emissions for the tenant: `energy × c_DC × L_share`.
fn scope2_emissions(energy: EnergyWh, dc: &DataCenterRecord, l_share: Share) -> EmissionsG {
    (energy * dc.grid_intensity) * l_share
}

/// Scope 2 for every (tenant, data center) pair the tenant lists, ordered by
/// tenant id then data center id.
pub fn compute_scope2(raw: &RawData, models: &ModelSet) -> Result<Vec<TenantDcScope2>, AllocationError> {
    let missing: BTreeSet<&str> =
        raw.server_usage().iter().map(|r| r.device_model.as_str()).filter(|m| !models.contains_key(*m)).collect();
    if !missing.is_empty() {
        return Err(AllocationError::MissingModel { models: missing.into_iter().map(str::to_string).collect() });
    }

    let mut out = Vec::new();
    for dc in raw.datacenters() {
        let mut partial = Vec::new();
        for tenant in raw.tenants().iter().filter(|t| t.datacenter_ids.contains(&dc.datacenter_id)) {
            let servers = raw
                .server_usage()
                .iter()
                .filter(|r| r.datacenter_id == dc.datacenter_id && r.tenant_id == tenant.tenant_id)
                .map(|r| {
                    let estimate = estimate_server_energy(&models[&r.device_model], r).map_err(|e| {
                        AllocationError::Inconsistent {
                            tenant_id: tenant.tenant_id.clone(),
                            datacenter_id: dc.datacenter_id.clone(),
                            reason: e.to_string(),
                        }
                    })?;
                    Ok(ServerContribution {
                        device_id: r.device_id.clone(),
                        device_model: r.device_model.clone(),
                        cpu_utilization: r.cpu_utilization,
                        cache_moved: r.cache_moved,
                        dram_accessed: r.dram_accessed,
                        disk_moved: r.disk_moved,
                        energy: estimate.energy,
                        emissions: scope2_emissions(estimate.energy, dc, tenant.l_share),
                    })
                })
                .collect::<Result<Vec<_>, AllocationError>>()?;
            let network: Vec<NetworkContribution> = raw
                .network_usage()
                .iter()
                .filter(|r| r.datacenter_id == dc.datacenter_id && r.tenant_id == tenant.tenant_id)
                .map(|r| {
                    let energy = estimate_network_energy(r);
                    NetworkContribution {
                        device_id: r.device_id.clone(),
                        device_type: r.device_type.clone(),
                        bytes_sent: r.bytes_sent,
                        bytes_received: r.bytes_received,
                        energy,
                        emissions: scope2_emissions(energy, dc, tenant.l_share),
                    }
                })
                .collect();
            let e_server: EnergyWh = servers.iter().map(|s| s.energy).sum();
            let e_network: EnergyWh = network.iter().map(|s| s.energy).sum();
            partial.push((tenant, servers, network, e_server, e_network));
        }

        let all_direct: EnergyWh = partial.iter().map(|p| p.3 + p.4).sum();

        for (tenant, servers, network, e_server, e_network) in partial {
            let direct = e_server + e_network;
            let split = |category: Scope2Category, devices: &[DeviceEnergy]| {
                let map_err = |e: ShareError| match e {
                    ShareError::ZeroDenominator { shared } => {
                        AllocationError::ZeroDenominator { datacenter_id: dc.datacenter_id.clone(), category, shared }
                    }
                    other => AllocationError::Inconsistent {
                        tenant_id: tenant.tenant_id.clone(),
                        datacenter_id: dc.datacenter_id.clone(),
                        reason: other.to_string(),
                    },
                };
                let total = allocate_shared_energy(devices, direct, all_direct).map_err(map_err)?;
                let ratio = shared_energy_ratio(direct, all_direct).map_err(map_err)?;
                let per_device = devices
                    .iter()
                    .map(|d| {
                        let energy = d.energy.scale(ratio);
                        SharedContribution {
                            device_id: d.device_id.clone(),
                            device_energy: d.energy,
                            ratio,
                            energy,
                            emissions: scope2_emissions(energy, dc, tenant.l_share),
                        }
                    })
                    .collect::<Vec<_>>();
                Ok::<_, AllocationError>((total, per_device))
            };
            let (e_cooling, cooling) = split(Scope2Category::Cooling, &dc.cooling_devices)?;
            let (e_other, other) = split(Scope2Category::Other, &dc.other_devices)?;
            let total = e_server + e_network + e_cooling + e_other;
            out.push(TenantDcScope2 {
                tenant_id: tenant.tenant_id.clone(),
                datacenter_id: dc.datacenter_id.clone(),
                grid_intensity: dc.grid_intensity,
                l_share: tenant.l_share,
                e_server,
                e_network,
                e_cooling,
                e_other,
                emissions: scope2_emissions(total, dc, tenant.l_share),
                servers,
                network,
                cooling,
                other,
            });
        }
    }
    out.sort_by(|a, b| (&a.tenant_id, &a.datacenter_id).cmp(&(&b.tenant_id, &b.datacenter_id)));
    Ok(out)
}
