//! The detailed JSON report.
//!
//! Per-scope and per-device objects follow the shape operators already know
//! from the reference report: `"type"`, `"isAggregate"`, `"energy"`,
//! `"emissions"`, and a `"devices"` map under Scope 2 keyed by device id.
//! Blocks around it (`tenant`, `summary`, `equivalencies`, `offsets`) are
//! defined here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::equivalency::{compute_equivalencies, EquivalencyFactors};
use super::trend::compute_trend;
use super::{ReportDocument, ReportFormat};
use crate::allocation::{
    DcFootprint, Footprint, FuelContribution, HistoryEntry, NetworkContribution, Offsets, ResponsibilityRatio,
    ServerContribution, SharedContribution, TenantDcScope2,
};
use crate::scope::{ComponentTotal, Scope2Category, ScopeBreakdown};
use crate::units::{CarbonIntensity, EmissionsG, EnergyWh, Period, Share};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

const SCOPE1: &str = "pipeline.datatypes.Scope1";
const SCOPE2: &str = "pipeline.datatypes.Scope2";
const SCOPE3: &str = "pipeline.datatypes.Scope3";
const SERVER: &str = "pipeline.datatypes.ServerDevice";
const NETWORK: &str = "pipeline.datatypes.NetworkDevice";
const SHARED: &str = "pipeline.datatypes.SharedDevice";
const GENERATOR: &str = "pipeline.datatypes.CombustionDevice";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report schema: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ReportJson {
    schema_version: u32,
    tenant: TenantJson,
    period: Period,
    summary: SummaryJson,
    equivalencies: EquivalenciesJson,
    offsets: OffsetsJson,
    scopes: ScopesJson,
    datacenters: Vec<DatacenterJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct TenantJson {
    tenant_id: String,
    display_name: String,
    agent_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SummaryJson {
    gross_emissions: EmissionsG,
    net_emissions: EmissionsG,
    emissions_per_agent: EmissionsG,
    over_offset: bool,
    history: Vec<HistoryJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct HistoryJson {
    period: Period,
    gross_emissions: EmissionsG,
    net_emissions: EmissionsG,
    pct_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct EquivalenciesJson {
    factors: FactorsJson,
    flights: f64,
    car_km: f64,
    smartphone_charges: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct FactorsJson {
    flight_ams_nyc: f64,
    car_km: f64,
    smartphone_charge: f64,
    source_note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct OffsetsJson {
    green_energy: EmissionsG,
    rec: EmissionsG,
    total: EmissionsG,
}

impl From<Offsets> for OffsetsJson {
    fn from(o: Offsets) -> Self {
        OffsetsJson { green_energy: o.green, rec: o.rec, total: o.total() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScopesJson {
    scope1: Scope1Json,
    scope2: Scope2Json,
    scope3: Scope3Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Scope1Json {
    #[serde(rename = "type")]
    kind: String,
    is_aggregate: bool,
    energy: EnergyWh,
    emissions: EmissionsG,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    devices: Option<Scope1Devices>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scope1Devices {
    generators: BTreeMap<String, GeneratorJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct GeneratorJson {
    #[serde(rename = "type")]
    kind: String,
    is_aggregate: bool,
    fuel_grams: f64,
    fuel_intensity: CarbonIntensity,
    emissions: EmissionsG,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Scope2Json {
    #[serde(rename = "type")]
    kind: String,
    is_aggregate: bool,
    energy: EnergyWh,
    emissions: EmissionsG,
    components: ComponentsJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    devices: Option<Scope2Devices>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentsJson {
    server: ComponentTotal,
    network: ComponentTotal,
    cooling: ComponentTotal,
    other: ComponentTotal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scope2Devices {
    servers: BTreeMap<String, ServerJson>,
    network: BTreeMap<String, NetworkJson>,
    cooling: BTreeMap<String, SharedJson>,
    other: BTreeMap<String, SharedJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ServerJson {
    #[serde(rename = "type")]
    kind: String,
    is_aggregate: bool,
    device_model: String,
    energy: EnergyWh,
    emissions: EmissionsG,
    utilization: f64,
    cache_moved: f64,
    dram_accessed: f64,
    disk_moved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct NetworkJson {
    #[serde(rename = "type")]
    kind: String,
    is_aggregate: bool,
    device_type: String,
    energy: EnergyWh,
    emissions: EmissionsG,
    bytes_sent: u64,
    bytes_received: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SharedJson {
    #[serde(rename = "type")]
    kind: String,
    is_aggregate: bool,
    device_energy: EnergyWh,
    share: f64,
    energy: EnergyWh,
    emissions: EmissionsG,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Scope3Json {
    #[serde(rename = "type")]
    kind: String,
    is_aggregate: bool,
    energy: EnergyWh,
    emissions: EmissionsG,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dc_total: Option<EmissionsG>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct DatacenterJson {
    datacenter_id: String,
    name: String,
    region: String,
    grid_intensity: CarbonIntensity,
    lambda: Share,
    l_share: Share,
    responsibility_ratio: Share,
    gross_emissions: EmissionsG,
    net_emissions: EmissionsG,
    offsets: OffsetsJson,
    over_offset: bool,
    scopes: ScopesJson,
}

fn components(b: &ScopeBreakdown) -> ComponentsJson {
    ComponentsJson {
        server: b.component(Scope2Category::Server),
        network: b.component(Scope2Category::Network),
        cooling: b.component(Scope2Category::Cooling),
        other: b.component(Scope2Category::Other),
    }
}

fn scope1(emissions: EmissionsG, aggregate: bool, devices: Option<Scope1Devices>) -> Scope1Json {
    Scope1Json { kind: SCOPE1.into(), is_aggregate: aggregate, energy: EnergyWh::ZERO, emissions, devices }
}

fn scope3(emissions: EmissionsG, aggregate: bool, dc_total: Option<EmissionsG>) -> Scope3Json {
    Scope3Json { kind: SCOPE3.into(), is_aggregate: aggregate, energy: EnergyWh::ZERO, emissions, dc_total }
}

fn shared_map(list: &[SharedContribution]) -> BTreeMap<String, SharedJson> {
    list.iter()
        .map(|d| {
            let json = SharedJson {
                kind: SHARED.into(),
                is_aggregate: false,
                device_energy: d.device_energy,
                share: d.ratio,
                energy: d.energy,
                emissions: d.emissions,
            };
            (d.device_id.clone(), json)
        })
        .collect()
}

fn datacenter_json(d: &DcFootprint) -> DatacenterJson {
    let s2 = &d.scope2;
    let servers = s2
        .servers
        .iter()
        .map(|s| {
            let json = ServerJson {
                kind: SERVER.into(),
                is_aggregate: false,
                device_model: s.device_model.clone(),
                energy: s.energy,
                emissions: s.emissions,
                utilization: s.cpu_utilization,
                cache_moved: s.cache_moved,
                dram_accessed: s.dram_accessed,
                disk_moved: s.disk_moved,
            };
            (s.device_id.clone(), json)
        })
        .collect();
    let network = s2
        .network
        .iter()
        .map(|n| {
            let json = NetworkJson {
                kind: NETWORK.into(),
                is_aggregate: false,
                device_type: n.device_type.clone(),
                energy: n.energy,
                emissions: n.emissions,
                bytes_sent: n.bytes_sent,
                bytes_received: n.bytes_received,
            };
            (n.device_id.clone(), json)
        })
        .collect();
    let generators = d
        .scope1_devices
        .iter()
        .map(|f| {
            let json = GeneratorJson {
                kind: GENERATOR.into(),
                is_aggregate: false,
                fuel_grams: f.fuel_grams,
                fuel_intensity: f.fuel_intensity,
                emissions: f.emissions,
            };
            (f.device_id.clone(), json)
        })
        .collect();
    DatacenterJson {
        datacenter_id: d.datacenter_id.clone(),
        name: d.name.clone(),
        region: d.region.clone(),
        grid_intensity: s2.grid_intensity,
        lambda: d.ratio.lambda,
        l_share: d.ratio.l_share,
        responsibility_ratio: d.ratio.r,
        gross_emissions: d.gross,
        net_emissions: d.net,
        offsets: d.offsets.into(),
        over_offset: d.over_offset,
        scopes: ScopesJson {
            scope1: scope1(d.breakdown.scope1, false, Some(Scope1Devices { generators })),
            scope2: Scope2Json {
                kind: SCOPE2.into(),
                is_aggregate: false,
                energy: s2.total_energy(),
                emissions: d.breakdown.scope2,
                components: components(&d.breakdown),
                devices: Some(Scope2Devices {
                    servers,
                    network,
                    cooling: shared_map(&s2.cooling),
                    other: shared_map(&s2.other),
                }),
            },
            scope3: scope3(d.breakdown.scope3, false, Some(d.scope3_dc_total)),
        },
    }
}

fn report_json(fp: &Footprint, factors: &EquivalencyFactors) -> ReportJson {
    let equivalencies = compute_equivalencies(fp.gross_total, factors);
    let aggregate = fp.aggregate_breakdown();
    let history = compute_trend(fp, &fp.history)
        .into_iter()
        .map(|d| HistoryJson {
            period: d.period,
            gross_emissions: d.gross,
            net_emissions: d.net,
            pct_change: d.pct_change,
        })
        .collect();
    ReportJson {
        schema_version: REPORT_SCHEMA_VERSION,
        tenant: TenantJson {
            tenant_id: fp.tenant_id.clone(),
            display_name: fp.display_name.clone(),
            agent_count: fp.agent_count,
        },
        period: fp.period,
        summary: SummaryJson {
            gross_emissions: fp.gross_total,
            net_emissions: fp.net_total,
            emissions_per_agent: fp.per_agent,
            over_offset: fp.is_over_offset(),
            history,
        },
        equivalencies: EquivalenciesJson {
            factors: FactorsJson {
                flight_ams_nyc: factors.flight_ams_nyc,
                car_km: factors.car_km,
                smartphone_charge: factors.smartphone_charge,
                source_note: factors.source_note.clone(),
            },
            flights: equivalencies.flights,
            car_km: equivalencies.car_km,
            smartphone_charges: equivalencies.smartphone_charges,
        },
        offsets: fp.offsets().into(),
        scopes: ScopesJson {
            scope1: scope1(aggregate.scope1, true, None),
            scope2: Scope2Json {
                kind: SCOPE2.into(),
                is_aggregate: true,
                energy: aggregate.scope2_energy(),
                emissions: aggregate.scope2,
                components: components(&aggregate),
                devices: None,
            },
            scope3: scope3(aggregate.scope3, true, None),
        },
        datacenters: fp.per_dc.iter().map(datacenter_json).collect(),
    }
}

/// Renders the detailed JSON report. Numbers are written at full precision
/// in their shortest round-trip form.
pub fn render_json(fp: &Footprint, factors: &EquivalencyFactors) -> ReportDocument {
    let mut content = serde_json::to_vec_pretty(&report_json(fp, factors)).expect("report serializes");
    content.push(b'\n');
    ReportDocument { tenant_id: fp.tenant_id.clone(), period: fp.period, format: ReportFormat::Json, content }
}

/// A report read back from JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub footprint: Footprint,
    pub factors: EquivalencyFactors,
}

fn expect_type(found: &str, expected: &str, at: &str) -> Result<(), ReportError> {
    if found == expected {
        Ok(())
    } else {
        Err(ReportError::Schema(format!("{at}: type {found:?}, expected {expected:?}")))
    }
}

fn shared_list(map: BTreeMap<String, SharedJson>, at: &str) -> Result<Vec<SharedContribution>, ReportError> {
    map.into_iter()
        .map(|(device_id, d)| {
            expect_type(&d.kind, SHARED, at)?;
            Ok(SharedContribution {
                device_id,
                device_energy: d.device_energy,
                ratio: d.share,
                energy: d.energy,
                emissions: d.emissions,
            })
        })
        .collect()
}

fn datacenter_from_json(tenant_id: &str, d: DatacenterJson) -> Result<DcFootprint, ReportError> {
    let at = format!("datacenters[{}]", d.datacenter_id);
    let ScopesJson { scope1, scope2, scope3 } = d.scopes;
    expect_type(&scope1.kind, SCOPE1, &at)?;
    expect_type(&scope2.kind, SCOPE2, &at)?;
    expect_type(&scope3.kind, SCOPE3, &at)?;
    let missing = |what: &str| ReportError::Schema(format!("{at}: missing {what}"));
    let generators = scope1.devices.ok_or_else(|| missing("scope1.devices"))?.generators;
    let devices = scope2.devices.ok_or_else(|| missing("scope2.devices"))?;
    let dc_total = scope3.dc_total.ok_or_else(|| missing("scope3.dcTotal"))?;

    let scope1_devices = generators
        .into_iter()
        .map(|(device_id, g)| {
            expect_type(&g.kind, GENERATOR, &at)?;
            Ok(FuelContribution {
                device_id,
                fuel_grams: g.fuel_grams,
                fuel_intensity: g.fuel_intensity,
                emissions: g.emissions,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    let servers = devices
        .servers
        .into_iter()
        .map(|(device_id, s)| {
            expect_type(&s.kind, SERVER, &at)?;
            Ok(ServerContribution {
                device_id,
                device_model: s.device_model,
                cpu_utilization: s.utilization,
                cache_moved: s.cache_moved,
                dram_accessed: s.dram_accessed,
                disk_moved: s.disk_moved,
                energy: s.energy,
                emissions: s.emissions,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    let network = devices
        .network
        .into_iter()
        .map(|(device_id, n)| {
            expect_type(&n.kind, NETWORK, &at)?;
            Ok(NetworkContribution {
                device_id,
                device_type: n.device_type,
                bytes_sent: n.bytes_sent,
                bytes_received: n.bytes_received,
                energy: n.energy,
                emissions: n.emissions,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;

    let c = scope2.components;
    let breakdown = ScopeBreakdown {
        scope1: scope1.emissions,
        scope2: scope2.emissions,
        scope3: scope3.emissions,
        scope2_components: [
            (Scope2Category::Server, c.server),
            (Scope2Category::Network, c.network),
            (Scope2Category::Cooling, c.cooling),
            (Scope2Category::Other, c.other),
        ]
        .into_iter()
        .collect(),
    };
    Ok(DcFootprint {
        ratio: ResponsibilityRatio {
            tenant_id: tenant_id.into(),
            datacenter_id: d.datacenter_id.clone(),
            lambda: d.lambda,
            l_share: d.l_share,
            r: d.responsibility_ratio,
        },
        scope2: TenantDcScope2 {
            tenant_id: tenant_id.into(),
            datacenter_id: d.datacenter_id.clone(),
            grid_intensity: d.grid_intensity,
            l_share: d.l_share,
            e_server: c.server.energy,
            e_network: c.network.energy,
            e_cooling: c.cooling.energy,
            e_other: c.other.energy,
            emissions: scope2.emissions,
            servers,
            network,
            cooling: shared_list(devices.cooling, &at)?,
            other: shared_list(devices.other, &at)?,
        },
        breakdown,
        scope1_devices,
        scope3_dc_total: dc_total,
        datacenter_id: d.datacenter_id,
        name: d.name,
        region: d.region,
        gross: d.gross_emissions,
        net: d.net_emissions,
        offsets: Offsets { green: d.offsets.green_energy, rec: d.offsets.rec },
        over_offset: d.over_offset,
    })
}

/// Reads a JSON report back into the footprint and factors it was rendered
/// from. Derived figures (aggregates, equivalencies, percent changes) are
/// not read; rendering the result again reproduces them.
pub fn parse_json(content: &[u8]) -> Result<ParsedReport, ReportError> {
    let r: ReportJson = serde_json::from_slice(content)?;
    if r.schema_version != REPORT_SCHEMA_VERSION {
        return Err(ReportError::Schema(format!("unsupported schemaVersion {}", r.schema_version)));
    }
    let factors = EquivalencyFactors {
        flight_ams_nyc: r.equivalencies.factors.flight_ams_nyc,
        car_km: r.equivalencies.factors.car_km,
        smartphone_charge: r.equivalencies.factors.smartphone_charge,
        source_note: r.equivalencies.factors.source_note,
    };
    factors.validate().map_err(|e| ReportError::Schema(e.to_string()))?;
    let tenant_id = r.tenant.tenant_id;
    let per_dc =
        r.datacenters.into_iter().map(|d| datacenter_from_json(&tenant_id, d)).collect::<Result<Vec<_>, _>>()?;
    let history = r
        .summary
        .history
        .into_iter()
        .map(|h| HistoryEntry { period: h.period, gross: h.gross_emissions, net: h.net_emissions })
        .collect();
    Ok(ParsedReport {
        footprint: Footprint {
            tenant_id,
            display_name: r.tenant.display_name,
            agent_count: r.tenant.agent_count,
            period: r.period,
            per_dc,
            gross_total: r.summary.gross_emissions,
            net_total: r.summary.net_emissions,
            per_agent: r.summary.emissions_per_agent,
            history,
        },
        factors,
    })
}

/// Gross and net of a report, for history lookups.
pub(crate) fn history_entry(content: &[u8]) -> Result<HistoryEntry, ReportError> {
    #[derive(Deserialize)]
    #[serde(rename_all = "camelCase")]
    struct Head {
        period: Period,
        summary: Totals,
    }
    #[derive(Deserialize)]
    #[serde(rename_all = "camelCase")]
    struct Totals {
        gross_emissions: EmissionsG,
        net_emissions: EmissionsG,
    }
    let head: Head = serde_json::from_slice(content)?;
    Ok(HistoryEntry { period: head.period, gross: head.summary.gross_emissions, net: head.summary.net_emissions })
}
