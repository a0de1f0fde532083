//! Input stage: CSV exports and configuration files in, one validated
//! [`RawData`] per reporting period out.
//!
//! Every CSV file starts with a `# schema_version: 1` comment line followed
//! by a header row. Header names are matched case-insensitively, columns may
//! appear in any order, and unknown columns are ignored. See `README.md` for
//! the column tables.

mod assemble;
mod dir;
mod parse;
pub(crate) mod table;
mod write;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{CarbonIntensity, EmissionsG, EnergyWh, Period, Share};

pub use assemble::assemble_raw_data;
pub use dir::{read_input_dir, write_input_dir};
pub use parse::{parse_datacenter_info, parse_network_usage, parse_server_usage, parse_tenant_info};
pub use write::{write_datacenter_info, write_network_usage, write_server_usage, write_tenant_info};

pub const SCHEMA_VERSION: u32 = 1;

pub const SERVERS_FILE: &str = "servers.csv";
pub const NETWORK_FILE: &str = "network.csv";
pub const DATACENTERS_FILE: &str = "datacenters.csv";
pub const TENANTS_FILE: &str = "tenants.csv";

/// One server device's monthly counters, as exported per tenant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerUsageRow {
    pub datacenter_id: String,
    pub device_id: String,
    pub device_model: String,
    pub tenant_id: String,
    /// Average CPU utilization in `[0, 1]`.
    pub cpu_utilization: f64,
    /// Bytes.
    pub cache_moved: f64,
    /// Bytes.
    pub dram_accessed: f64,
    /// Bytes.
    pub disk_moved: f64,
    /// Source line, 0 when the row was not read from a file.
    #[serde(skip)]
    pub line: usize,
}

/// Bytes one tenant pushed through one network device port.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkUsageRow {
    pub datacenter_id: String,
    pub device_id: String,
    pub device_type: String,
    pub tenant_id: String,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    #[serde(skip)]
    pub line: usize,
}

/// A shared device (cooling or other) and its total energy for the period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceEnergy {
    pub device_id: String,
    pub energy: EnergyWh,
}

/// Fuel burnt by a combustion device, typically a backup generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelEntry {
    pub device_id: String,
    /// Grams of fuel.
    pub fuel_grams: f64,
    /// Grams CO₂e per gram of fuel.
    pub fuel_intensity: CarbonIntensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCenterRecord {
    pub datacenter_id: String,
    pub name: String,
    pub region: String,
    /// Grams CO₂e per Wh of grid electricity, constant over the period.
    pub grid_intensity: CarbonIntensity,
    pub cooling_devices: Vec<DeviceEnergy>,
    pub other_devices: Vec<DeviceEnergy>,
    pub fuel_log: Vec<FuelEntry>,
    pub scope3_total: EmissionsG,
    pub green_energy: EnergyWh,
    pub rec_offset: EmissionsG,
    #[serde(skip)]
    pub line: usize,
}

impl DataCenterRecord {
    pub fn cooling_total(&self) -> EnergyWh {
        self.cooling_devices.iter().map(|d| d.energy).sum()
    }

    pub fn other_total(&self) -> EnergyWh {
        self.other_devices.iter().map(|d| d.energy).sum()
    }

    /// Scope 1 emissions of the whole data center.
    pub fn fuel_emissions_total(&self) -> EmissionsG {
        self.fuel_log
            .iter()
            .map(|f| EmissionsG::gross(f.fuel_grams * f.fuel_intensity.value()).unwrap_or_default())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenantRecord {
    pub tenant_id: String,
    pub display_name: String,
    /// Number of end users (agents) of the tenant.
    pub agent_count: u64,
    pub datacenter_ids: Vec<String>,
    /// Consumer-side share of attributable emissions.
    pub l_share: Share,
    #[serde(skip)]
    pub line: usize,
}

/// Validated input for one reporting period.
///
/// Only [`assemble_raw_data`] constructs it, so holding one means every
/// cross-reference has resolved. Records are sorted by id and usage rows by
/// `(datacenter_id, device_id, tenant_id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    period: Period,
    datacenters: Vec<DataCenterRecord>,
    tenants: Vec<TenantRecord>,
    server_usage: Vec<ServerUsageRow>,
    network_usage: Vec<NetworkUsageRow>,
}

impl RawData {
    pub fn period(&self) -> Period {
        self.period
    }

    pub fn datacenters(&self) -> &[DataCenterRecord] {
        &self.datacenters
    }

    pub fn tenants(&self) -> &[TenantRecord] {
        &self.tenants
    }

    pub fn server_usage(&self) -> &[ServerUsageRow] {
        &self.server_usage
    }

    pub fn network_usage(&self) -> &[NetworkUsageRow] {
        &self.network_usage
    }

    pub fn datacenter(&self, id: &str) -> Option<&DataCenterRecord> {
        self.datacenters.binary_search_by(|d| d.datacenter_id.as_str().cmp(id)).ok().map(|i| &self.datacenters[i])
    }

    pub fn tenant(&self, id: &str) -> Option<&TenantRecord> {
        self.tenants.binary_search_by(|t| t.tenant_id.as_str().cmp(id)).ok().map(|i| &self.tenants[i])
    }

    /// Replaces every tenant's `l_share`.
    pub fn with_l_share(mut self, share: Share) -> RawData {
        for t in &mut self.tenants {
            t.l_share = share;
        }
        self
    }

    /// Decomposes into the constituent lists, e.g. to mutate and reassemble.
    pub fn into_parts(
        self,
    ) -> (Period, Vec<DataCenterRecord>, Vec<TenantRecord>, Vec<ServerUsageRow>, Vec<NetworkUsageRow>) {
        (self.period, self.datacenters, self.tenants, self.server_usage, self.network_usage)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("{file}: {reason}")]
    Unreadable { file: String, reason: String },
    #[error("{file}: first line must be `# schema_version: {SCHEMA_VERSION}`")]
    MissingSchemaVersion { file: String },
    #[error("{file}: unsupported schema_version {found}")]
    UnsupportedSchemaVersion { file: String, found: String },
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file}:{line}: malformed row: {reason}")]
    MalformedRow { file: String, line: usize, reason: String },
    #[error("{file}:{line}: {field} = {value} is out of range ({expected})")]
    RangeError { file: String, line: usize, field: String, value: String, expected: &'static str },
    #[error("{location}: duplicate id {id:?}")]
    DuplicateId { id: String, location: Location },
    #[error("{location}: device {device_id:?} in {datacenter_id} listed more than once for tenant {tenant_id:?}")]
    DuplicateDevice { datacenter_id: String, device_id: String, tenant_id: String, location: Location },
    #[error("{location}: server {device_id:?} in {datacenter_id} is assigned to tenants {first:?} and {second:?}; server devices cannot be shared")]
    SharedServerDevice { datacenter_id: String, device_id: String, first: String, second: String, location: Location },
    #[error("{location}: unknown tenant {id:?}")]
    UnknownTenant { id: String, location: Location },
    #[error("{location}: unknown data center {id:?}")]
    UnknownDataCenter { id: String, location: Location },
    #[error("{location}: usage of device {device_id:?} by tenant {tenant_id:?} in {datacenter_id}, which the tenant does not list")]
    OrphanUsage { device_id: String, tenant_id: String, datacenter_id: String, location: Location },
    #[error("{location}: tenant {tenant_id:?} lists no data centers")]
    NoDataCenters { tenant_id: String, location: Location },
}

/// Where an offending record came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: &'static str,
    /// 0 when not read from a file.
    pub line: usize,
}

impl Location {
    pub fn new(file: &'static str, line: usize) -> Self {
        Location { file, line }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(self.file)
        } else {
            write!(f, "{}:{}", self.file, self.line)
        }
    }
}

/// Every problem found in one validation pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationErrors(pub Vec<IngestError>);

impl ValidationErrors {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &IngestError> {
        self.0.iter()
    }

    pub fn extend(&mut self, other: ValidationErrors) {
        self.0.extend(other.0);
    }

    pub(crate) fn into_result<T>(self, value: T) -> Result<T, ValidationErrors> {
        if self.0.is_empty() {
            Ok(value)
        } else {
            Err(self)
        }
    }
}

impl From<IngestError> for ValidationErrors {
    fn from(e: IngestError) -> Self {
        ValidationErrors(vec![e])
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} validation error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}
