//! The footprint engine.
//!
//! Computation runs in a fixed, acyclic order per data center:
//!
//! 1. Scope 2 per tenant from estimated device energy ([`compute_scope2`]).
//! 2. The share λ of the data center's Scope 2 each tenant holds, and the
//!    responsibility ratio `r = λ × L_share` ([`compute_responsibility_ratios`]).
//! 3. Scope 1 and Scope 3 attributed by `r` ([`compute_scope1`], [`compute_scope3`]).
//! 4. Gross and net totals ([`compute_gross_tcf`], [`compute_net_tcf`]).
//!
//! Scope 2 depends only on energy and grid intensity, so step 2 never feeds
//! back into step 1.

mod audit;
mod footprint;
mod history;
mod ratio;
mod scope2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scope::{Scope2Category, ScopeBreakdown};
use crate::units::{CarbonIntensity, EmissionsG, EnergyWh, Period, Share};

pub use audit::{conservation_audit, AuditCheck, AuditReport, AUDIT_TOLERANCE};
pub use footprint::compute_footprints;
pub use history::{HistoryEntry, HistoryError, HistorySource, MemoryHistory, NoHistory};
pub use ratio::{
    compute_gross_tcf, compute_net_tcf, compute_responsibility_ratios, compute_scope1, compute_scope3,
    scope1_attribution, NetTcf,
};
pub use scope2::compute_scope2;

/// A server's counters and its estimated energy and emissions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerContribution {
    pub device_id: String,
    pub device_model: String,
    pub cpu_utilization: f64,
    pub cache_moved: f64,
    pub dram_accessed: f64,
    pub disk_moved: f64,
    pub energy: EnergyWh,
    pub emissions: EmissionsG,
}

/// A tenant's traffic through one network device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkContribution {
    pub device_id: String,
    pub device_type: String,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub energy: EnergyWh,
    pub emissions: EmissionsG,
}

/// A tenant's proportional slice of a shared cooling or other device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedContribution {
    pub device_id: String,
    /// The device's energy for the whole data center.
    pub device_energy: EnergyWh,
    /// Tenant direct energy over all tenants' direct energy.
    pub ratio: f64,
    pub energy: EnergyWh,
    pub emissions: EmissionsG,
}

/// Flat provenance line, one per device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceLine<'a> {
    pub device_id: &'a str,
    pub category: Scope2Category,
    pub energy: EnergyWh,
    pub emissions: EmissionsG,
}

/// Scope 2 of one tenant in one data center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenantDcScope2 {
    pub tenant_id: String,
    pub datacenter_id: String,
    pub grid_intensity: CarbonIntensity,
    pub l_share: Share,
    pub e_server: EnergyWh,
    pub e_network: EnergyWh,
    pub e_cooling: EnergyWh,
    pub e_other: EnergyWh,
    pub emissions: EmissionsG,
    pub servers: Vec<ServerContribution>,
    pub network: Vec<NetworkContribution>,
    pub cooling: Vec<SharedContribution>,
    pub other: Vec<SharedContribution>,
}

impl TenantDcScope2 {
    pub fn energy(&self, category: Scope2Category) -> EnergyWh {
        match category {
            Scope2Category::Server => self.e_server,
            Scope2Category::Network => self.e_network,
            Scope2Category::Cooling => self.e_cooling,
            Scope2Category::Other => self.e_other,
        }
    }

    pub fn total_energy(&self) -> EnergyWh {
        self.e_server + self.e_network + self.e_cooling + self.e_other
    }

    /// Server plus network energy, the base for shared-device splits.
    pub fn direct_energy(&self) -> EnergyWh {
        self.e_server + self.e_network
    }

    pub fn per_device(&self) -> Vec<DeviceLine<'_>> {
        let servers = self.servers.iter().map(|d| DeviceLine {
            device_id: &d.device_id,
            category: Scope2Category::Server,
            energy: d.energy,
            emissions: d.emissions,
        });
        let network = self.network.iter().map(|d| DeviceLine {
            device_id: &d.device_id,
            category: Scope2Category::Network,
            energy: d.energy,
            emissions: d.emissions,
        });
        fn shared(category: Scope2Category, list: &[SharedContribution]) -> Vec<DeviceLine<'_>> {
            list.iter()
                .map(|d| DeviceLine { device_id: &d.device_id, category, energy: d.energy, emissions: d.emissions })
                .collect()
        }
        servers
            .chain(network)
            .chain(shared(Scope2Category::Cooling, &self.cooling))
            .chain(shared(Scope2Category::Other, &self.other))
            .collect()
    }
}

/// `r = λ × L_share` for one tenant in one data center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsibilityRatio {
    pub tenant_id: String,
    pub datacenter_id: String,
    pub lambda: Share,
    pub l_share: Share,
    pub r: Share,
}

/// Scope 1 attributed from one combustion device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelContribution {
    pub device_id: String,
    /// Fuel burnt by the device in the whole data center.
    pub fuel_grams: f64,
    pub fuel_intensity: CarbonIntensity,
    pub emissions: EmissionsG,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Offsets {
    pub green: EmissionsG,
    pub rec: EmissionsG,
}

impl Offsets {
    pub fn total(&self) -> EmissionsG {
        self.green + self.rec
    }
}

/// A tenant's footprint in one data center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcFootprint {
    pub datacenter_id: String,
    pub name: String,
    pub region: String,
    pub ratio: ResponsibilityRatio,
    pub breakdown: ScopeBreakdown,
    pub scope2: TenantDcScope2,
    pub scope1_devices: Vec<FuelContribution>,
    /// The data center's whole Scope 3, before attribution.
    pub scope3_dc_total: EmissionsG,
    pub gross: EmissionsG,
    pub net: EmissionsG,
    pub offsets: Offsets,
    pub over_offset: bool,
}

/// One tenant's footprint for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub tenant_id: String,
    pub display_name: String,
    pub agent_count: u64,
    pub period: Period,
    pub per_dc: Vec<DcFootprint>,
    pub gross_total: EmissionsG,
    pub net_total: EmissionsG,
    pub per_agent: EmissionsG,
    /// Up to two prior periods, most recent first.
    pub history: Vec<HistoryEntry>,
}

impl Footprint {
    pub fn is_over_offset(&self) -> bool {
        self.net_total.is_negative()
    }

    pub fn offsets(&self) -> Offsets {
        self.per_dc.iter().fold(Offsets::default(), |acc, d| Offsets {
            green: acc.green + d.offsets.green,
            rec: acc.rec + d.offsets.rec,
        })
    }

    /// Scope breakdown summed over data centers.
    pub fn aggregate_breakdown(&self) -> ScopeBreakdown {
        let mut total = ScopeBreakdown::default();
        for d in &self.per_dc {
            total.scope1 += d.breakdown.scope1;
            total.scope2 += d.breakdown.scope2;
            total.scope3 += d.breakdown.scope3;
            for c in Scope2Category::ALL {
                let part = d.breakdown.component(c);
                let entry = total.scope2_components.entry(c).or_default();
                entry.energy += part.energy;
                entry.emissions += part.emissions;
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("no calibrated power model for device model(s): {}", models.join(", "))]
    MissingModel { models: Vec<String> },
    #[error(
        "{datacenter_id}: shared {category} energy {shared} cannot be split, no tenant has server or network energy"
    )]
    ZeroDenominator { datacenter_id: String, category: Scope2Category, shared: EnergyWh },
    #[error("{datacenter_id}: total Scope 2 is zero but Scope 1 or Scope 3 emissions need distributing")]
    ZeroDcScope2 { datacenter_id: String },
    #[error("{datacenter_id}/{tenant_id}: {reason}")]
    Inconsistent { tenant_id: String, datacenter_id: String, reason: String },
    #[error("tenant {tenant_id}: {source}")]
    History {
        tenant_id: String,
        #[source]
        source: HistoryError,
    },
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::ingest::{
        assemble_raw_data, DataCenterRecord, DeviceEnergy, FuelEntry, NetworkUsageRow, RawData, ServerUsageRow,
        TenantRecord,
    };
    use crate::power::{ModelSet, ServerPowerModel};
    use crate::units::{CarbonIntensity, EmissionsG, EnergyWh, Period, Share};

    pub fn wh(v: f64) -> EnergyWh {
        EnergyWh::new(v).unwrap()
    }

    pub fn g(v: f64) -> EmissionsG {
        EmissionsG::gross(v).unwrap()
    }

    /// A model that predicts `intercept + w_cpu·u`, nothing from bytes.
    pub fn linear_model(name: &str, intercept: f64, w_cpu: f64) -> ServerPowerModel {
        ServerPowerModel {
            device_model: name.into(),
            intercept,
            w_cpu,
            w_cache: 0.0,
            w_dram: 0.0,
            w_disk: 0.0,
            adjusted_r2: 1.0,
        }
    }

    pub fn models() -> ModelSet {
        [linear_model("FLAT", 0.0, 10_000.0)].into_iter().map(|m| (m.device_model.clone(), m)).collect()
    }

    pub fn dc(id: &str, intensity: f64) -> DataCenterRecord {
        DataCenterRecord {
            datacenter_id: id.into(),
            name: format!("{id} name"),
            region: "EU".into(),
            grid_intensity: CarbonIntensity::new(intensity).unwrap(),
            cooling_devices: vec![],
            other_devices: vec![],
            fuel_log: vec![],
            scope3_total: EmissionsG::ZERO,
            green_energy: EnergyWh::ZERO,
            rec_offset: EmissionsG::ZERO,
            line: 0,
        }
    }

    pub fn tenant(id: &str, dcs: &[&str]) -> TenantRecord {
        TenantRecord {
            tenant_id: id.into(),
            display_name: id.into(),
            agent_count: 100,
            datacenter_ids: dcs.iter().map(|s| s.to_string()).collect(),
            l_share: Share::ONE,
            line: 0,
        }
    }

    /// A server on the `FLAT` model drawing `energy` Wh (`energy ≤ 10000`).
    pub fn server(dc: &str, device: &str, tenant: &str, energy: f64) -> ServerUsageRow {
        ServerUsageRow {
            datacenter_id: dc.into(),
            device_id: device.into(),
            device_model: "FLAT".into(),
            tenant_id: tenant.into(),
            cpu_utilization: energy / 10_000.0,
            cache_moved: 0.0,
            dram_accessed: 0.0,
            disk_moved: 0.0,
            line: 0,
        }
    }

    pub fn network(dc: &str, device: &str, tenant: &str, bytes: u64) -> NetworkUsageRow {
        NetworkUsageRow {
            datacenter_id: dc.into(),
            device_id: device.into(),
            device_type: "router".into(),
            tenant_id: tenant.into(),
            bytes_sent: bytes,
            bytes_received: 0,
            line: 0,
        }
    }

    /// Two tenants in DC_EU1 with direct energy 2500 / 7500 Wh and a
    /// 10000 Wh cooling unit; B also uses DC_US1.
    pub fn two_tenant_raw() -> RawData {
        let mut eu = dc("DC_EU1", 0.4);
        eu.cooling_devices = vec![DeviceEnergy { device_id: "CRAC_1".into(), energy: wh(10_000.0) }];
        eu.fuel_log = vec![FuelEntry {
            device_id: "GEN_1".into(),
            fuel_grams: 1000.0,
            fuel_intensity: CarbonIntensity::new(2.5).unwrap(),
        }];
        eu.scope3_total = g(500_000.0);
        let us = dc("DC_US1", 0.2);
        assemble_raw_data(
            Period::new(2023, 1).unwrap(),
            vec![eu, us],
            vec![tenant("A", &["DC_EU1"]), tenant("B", &["DC_EU1", "DC_US1"])],
            vec![
                server("DC_EU1", "S_A", "A", 2_500.0),
                server("DC_EU1", "S_B", "B", 7_500.0),
                server("DC_US1", "S_B2", "B", 1_000.0),
            ],
            vec![],
        )
        .unwrap()
    }
}
