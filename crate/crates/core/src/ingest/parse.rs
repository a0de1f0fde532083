use std::collections::BTreeSet;
use std::io::Read;

use super::table::{parse_real, Cells, Table};
use super::{
    DataCenterRecord, DeviceEnergy, FuelEntry, IngestError, Location, NetworkUsageRow, ServerUsageRow, TenantRecord,
    ValidationErrors, DATACENTERS_FILE, NETWORK_FILE, SERVERS_FILE, TENANTS_FILE,
};
use crate::units::{CarbonIntensity, EmissionsG, EnergyWh, Share};

const SERVER_COLUMNS: &[&str] = &[
    "datacenter_id",
    "device_id",
    "device_model",
    "tenant_id",
    "cpu_utilization",
    "cache_moved",
    "dram_accessed",
    "disk_moved",
];

const NETWORK_COLUMNS: &[&str] =
    &["datacenter_id", "device_id", "device_type", "tenant_id", "bytes_sent", "bytes_received"];

const DATACENTER_COLUMNS: &[&str] = &["datacenter_id", "name", "region", "grid_intensity"];

const TENANT_COLUMNS: &[&str] = &["tenant_id", "display_name", "agent_count", "datacenter_ids"];

/// Runs `convert` on every row, collecting all row errors.
fn convert_rows<T>(
    table: &Table,
    mut errors: ValidationErrors,
    mut convert: impl FnMut(&Cells<'_>) -> Result<T, IngestError>,
) -> Result<Vec<T>, ValidationErrors> {
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        match convert(&table.cells(row)) {
            Ok(v) => out.push(v),
            Err(e) => errors.0.push(e),
        }
    }
    errors.into_result(out)
}

/// Parses the per-tenant server usage export.
///
/// ```
/// use tcf_core::ingest::parse_server_usage;
///
/// let csv = "# schema_version: 1\n\
///            datacenter_id,device_id,device_model,tenant_id,cpu_utilization,cache_moved,dram_accessed,disk_moved\n\
///            DC_EU1,SERVER_1234,ABC_987,TENANT_X,0.10,2e7,5e9,2e10\n";
/// let rows = parse_server_usage(csv.as_bytes()).unwrap();
/// assert_eq!(rows[0].dram_accessed, 5e9);
/// ```
pub fn parse_server_usage<R: Read>(source: R) -> Result<Vec<ServerUsageRow>, ValidationErrors> {
    let (table, errors) = Table::read(source, SERVERS_FILE, SERVER_COLUMNS)?;
    convert_rows(&table, errors, |c| {
        let cpu_utilization = c.real("cpu_utilization")?;
        if !(0.0..=1.0).contains(&cpu_utilization) {
            return Err(c.range("cpu_utilization", cpu_utilization, "within [0, 1]"));
        }
        Ok(ServerUsageRow {
            datacenter_id: c.text("datacenter_id")?,
            device_id: c.text("device_id")?,
            device_model: c.text("device_model")?,
            tenant_id: c.text("tenant_id")?,
            cpu_utilization: cpu_utilization + 0.0,
            cache_moved: c.non_negative("cache_moved")?,
            dram_accessed: c.non_negative("dram_accessed")?,
            disk_moved: c.non_negative("disk_moved")?,
            line: c.line(),
        })
    })
}

/// Parses the per-port network usage export.
pub fn parse_network_usage<R: Read>(source: R) -> Result<Vec<NetworkUsageRow>, ValidationErrors> {
    let (table, errors) = Table::read(source, NETWORK_FILE, NETWORK_COLUMNS)?;
    convert_rows(&table, errors, |c| {
        Ok(NetworkUsageRow {
            datacenter_id: c.text("datacenter_id")?,
            device_id: c.text("device_id")?,
            device_type: c.text("device_type")?,
            tenant_id: c.text("tenant_id")?,
            bytes_sent: c.count("bytes_sent")?,
            bytes_received: c.count("bytes_received")?,
            line: c.line(),
        })
    })
}

/// Parses `ID=ENERGY;ID=ENERGY` cells listing shared devices.
fn device_energies(c: &Cells<'_>, column: &str) -> Result<Vec<DeviceEnergy>, IngestError> {
    let mut seen = BTreeSet::new();
    split_list(c.get(column).unwrap_or_default())
        .map(|item| {
            let (id, energy) = item
                .split_once('=')
                .ok_or_else(|| c.malformed(format!("`{column}` entry {item:?} is not DEVICE=WH")))?;
            let id = id.trim();
            let value = parse_real(energy)
                .ok_or_else(|| c.malformed(format!("`{column}` entry {item:?} has a non-numeric energy")))?;
            let energy = EnergyWh::new(value).map_err(|_| c.range(column, item, "energy >= 0"))?;
            if id.is_empty() || !seen.insert(id.to_string()) {
                return Err(c.malformed(format!("`{column}` has an empty or repeated device id in {item:?}")));
            }
            Ok(DeviceEnergy { device_id: id.to_string(), energy })
        })
        .collect()
}

/// Parses `ID=GRAMS@INTENSITY;...` fuel log cells.
fn fuel_entries(c: &Cells<'_>) -> Result<Vec<FuelEntry>, IngestError> {
    let mut seen = BTreeSet::new();
    split_list(c.get("fuel_log").unwrap_or_default())
        .map(|item| {
            let bad = || c.malformed(format!("`fuel_log` entry {item:?} is not DEVICE=GRAMS@G_PER_G"));
            let (id, rest) = item.split_once('=').ok_or_else(bad)?;
            let (grams, intensity) = rest.split_once('@').ok_or_else(bad)?;
            let grams = parse_real(grams).ok_or_else(bad)?;
            let intensity = parse_real(intensity).ok_or_else(bad)?;
            if grams < 0.0 || intensity < 0.0 {
                return Err(c.range("fuel_log", item, "fuel and intensity >= 0"));
            }
            let id = id.trim();
            if id.is_empty() || !seen.insert(id.to_string()) {
                return Err(c.malformed(format!("`fuel_log` has an empty or repeated device id in {item:?}")));
            }
            Ok(FuelEntry {
                device_id: id.to_string(),
                fuel_grams: grams + 0.0,
                fuel_intensity: CarbonIntensity::new(intensity).map_err(|_| bad())?,
            })
        })
        .collect()
}

fn split_list(cell: &str) -> impl Iterator<Item = &str> {
    cell.split(';').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses the data center information file. Offset and Scope 3 columns are
/// optional and default to zero.
pub fn parse_datacenter_info<R: Read>(source: R) -> Result<Vec<DataCenterRecord>, ValidationErrors> {
    let (table, errors) = Table::read(source, DATACENTERS_FILE, DATACENTER_COLUMNS)?;
    let records = convert_rows(&table, errors, |c| {
        Ok(DataCenterRecord {
            datacenter_id: c.text("datacenter_id")?,
            name: c.get("name").unwrap_or_default().to_string(),
            region: c.get("region").unwrap_or_default().to_string(),
            grid_intensity: CarbonIntensity::new(c.non_negative("grid_intensity")?)
                .map_err(|e| c.malformed(e.to_string()))?,
            cooling_devices: device_energies(c, "cooling_devices")?,
            other_devices: device_energies(c, "other_devices")?,
            fuel_log: fuel_entries(c)?,
            scope3_total: EmissionsG::gross(c.optional_non_negative("scope3_total")?)
                .map_err(|e| c.malformed(e.to_string()))?,
            green_energy: EnergyWh::new(c.optional_non_negative("green_energy")?)
                .map_err(|e| c.malformed(e.to_string()))?,
            rec_offset: EmissionsG::gross(c.optional_non_negative("rec_offset")?)
                .map_err(|e| c.malformed(e.to_string()))?,
            line: c.line(),
        })
    })?;
    reject_duplicates(records, DATACENTERS_FILE, |d| (&d.datacenter_id, d.line))
}

/// Parses the tenant information file. `datacenter_ids` is a
/// semicolon-separated list; `l_share` is optional and defaults to 1.
pub fn parse_tenant_info<R: Read>(source: R) -> Result<Vec<TenantRecord>, ValidationErrors> {
    let (table, errors) = Table::read(source, TENANTS_FILE, TENANT_COLUMNS)?;
    let records = convert_rows(&table, errors, |c| {
        let agents = c.real("agent_count")?;
        if agents < 1.0 || agents.fract() != 0.0 {
            return Err(c.range("agent_count", agents, "a positive integer"));
        }
        let datacenter_ids: Vec<String> =
            split_list(c.get("datacenter_ids").unwrap_or_default()).map(str::to_string).collect();
        if datacenter_ids.is_empty() {
            return Err(c.malformed("`datacenter_ids` is empty".into()));
        }
        let l_share = match c.get("l_share") {
            None | Some("") => Share::ONE,
            Some(_) => {
                let v = c.real("l_share")?;
                Share::new(v).map_err(|_| c.range("l_share", v, "within [0, 1]"))?
            }
        };
        let tenant_id = c.text("tenant_id")?;
        // Tenant ids name report directories.
        if tenant_id == "." || tenant_id == ".." || tenant_id.contains(['/', '\\']) {
            return Err(c.malformed(format!("tenant id {tenant_id:?} is not usable as a directory name")));
        }
        Ok(TenantRecord {
            tenant_id,
            display_name: c.get("display_name").unwrap_or_default().to_string(),
            agent_count: agents as u64,
            datacenter_ids,
            l_share,
            line: c.line(),
        })
    })?;
    reject_duplicates(records, TENANTS_FILE, |t| (&t.tenant_id, t.line))
}

fn reject_duplicates<T>(
    records: Vec<T>,
    file: &'static str,
    key: impl Fn(&T) -> (&String, usize),
) -> Result<Vec<T>, ValidationErrors> {
    let mut seen = BTreeSet::new();
    let mut errors = ValidationErrors::default();
    for r in &records {
        let (id, line) = key(r);
        if !seen.insert(id.clone()) {
            errors.0.push(IngestError::DuplicateId { id: id.clone(), location: Location::new(file, line) });
        }
    }
    errors.into_result(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SERVER_HEADER: &str = "# schema_version: 1\n\
        datacenter_id,device_id,device_model,tenant_id,cpu_utilization,cache_moved,dram_accessed,disk_moved\n";
    const NETWORK_HEADER: &str =
        "# schema_version: 1\ndatacenter_id,device_id,device_type,tenant_id,bytes_sent,bytes_received\n";

    #[test]
    fn server_row_from_listing_values() {
        let csv = format!("{SERVER_HEADER}DC_EU1,SERVER_1234,ABC_987,TENANT_X,0.10,2e7,5e9,2e10\n");
        let rows = parse_server_usage(csv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.device_id, "SERVER_1234");
        assert_eq!(r.device_model, "ABC_987");
        assert_eq!(r.cpu_utilization, 0.10);
        assert_eq!(r.cache_moved, 2e7);
        assert_eq!(r.dram_accessed, 5e9);
        assert_eq!(r.disk_moved, 2e10);
        assert_eq!(r.line, 3);
    }

    #[test]
    fn header_only_file_is_empty() {
        assert!(parse_server_usage(SERVER_HEADER.as_bytes()).unwrap().is_empty());
        assert!(parse_network_usage(NETWORK_HEADER.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn utilization_out_of_range() {
        let csv = format!("{SERVER_HEADER}DC_EU1,S1,M,T,0.5,1,1,1\nDC_EU1,S2,M,T,1.5,1,1,1\nDC_EU1,S3,M,T,x,1,1,1\n");
        let errs = parse_server_usage(csv.as_bytes()).unwrap_err();
        assert_eq!(errs.len(), 2, "all bad rows reported: {errs}");
        assert!(matches!(&errs.0[0], IngestError::RangeError { line: 4, field, .. } if field == "cpu_utilization"));
        assert!(matches!(&errs.0[1], IngestError::MalformedRow { line: 5, .. }));
    }

    #[test]
    fn extra_columns_ignored_and_case_folded() {
        let csv = "# schema_version: 1\n\
            EXTRA,DataCenter_ID,device_id,device_model,tenant_id,CPU_UTILIZATION,cache_moved,dram_accessed,disk_moved\n\
            zzz,DC,S,M,T,0.2,1,2,3\n";
        let rows = parse_server_usage(csv.as_bytes()).unwrap();
        assert_eq!(rows[0].datacenter_id, "DC");
        assert_eq!(rows[0].cpu_utilization, 0.2);
    }

    #[test]
    fn network_row_from_listing_values() {
        let csv = format!("{NETWORK_HEADER}DC_EU1,NETWORK_DEVICE_1234,router,TENANT_X,1000000000000,1000000000000\n");
        let rows = parse_network_usage(csv.as_bytes()).unwrap();
        assert_eq!(rows[0].bytes_sent, 1_000_000_000_000);
        assert_eq!(rows[0].bytes_received, 1_000_000_000_000);
        assert_eq!(rows[0].device_type, "router");
    }

    #[test]
    fn network_counts_accept_scientific_notation() {
        let csv = format!("{NETWORK_HEADER}DC,R,router,T,1e12,5E8\n");
        let rows = parse_network_usage(csv.as_bytes()).unwrap();
        assert_eq!(rows[0].bytes_sent, 1_000_000_000_000);
        assert_eq!(rows[0].bytes_received, 500_000_000);
    }

    #[test]
    fn negative_byte_count_is_range_error() {
        let csv = format!("{NETWORK_HEADER}DC,R,router,T,-5,0\n");
        let errs = parse_network_usage(csv.as_bytes()).unwrap_err();
        assert!(matches!(&errs.0[0], IngestError::RangeError { field, .. } if field == "bytes_sent"));
        let csv = format!("{NETWORK_HEADER}DC,R,router,T,1.5,0\n");
        assert!(matches!(&parse_network_usage(csv.as_bytes()).unwrap_err().0[0], IngestError::MalformedRow { .. }));
    }

    #[test]
    fn shared_network_device_rows_both_accepted() {
        let csv = format!("{NETWORK_HEADER}DC,R1,switch,T1,10,20\nDC,R1,switch,T2,30,40\n");
        let rows = parse_network_usage(csv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].device_id, rows[1].device_id);
    }

    #[test]
    fn datacenter_defaults_to_zero_offsets() {
        let csv = "# schema_version: 1\ndatacenter_id,name,region,grid_intensity\nDC_EU1,Amsterdam 1,EU,0.4\n";
        let dcs = parse_datacenter_info(csv.as_bytes()).unwrap();
        let dc = &dcs[0];
        assert_eq!(dc.grid_intensity.value(), 0.4);
        assert_eq!(dc.green_energy, EnergyWh::ZERO);
        assert_eq!(dc.rec_offset, EmissionsG::ZERO);
        assert_eq!(dc.scope3_total, EmissionsG::ZERO);
        assert!(dc.cooling_devices.is_empty() && dc.fuel_log.is_empty());
    }

    #[test]
    fn datacenter_device_lists() {
        let csv = "# schema_version: 1\n\
            datacenter_id,name,region,grid_intensity,cooling_devices,other_devices,fuel_log,scope3_total,green_energy,rec_offset\n\
            DC,N,R,0.4,CRAC_1=10000;CRAC_2=5e3,LIGHTS=200,GEN_1=1000@2.5,500000,1000000,200000\n";
        let dc = &parse_datacenter_info(csv.as_bytes()).unwrap()[0];
        assert_eq!(dc.cooling_total().value(), 15000.0);
        assert_eq!(dc.other_devices[0].device_id, "LIGHTS");
        assert_eq!(dc.fuel_log[0].fuel_grams, 1000.0);
        assert_eq!(dc.fuel_log[0].fuel_intensity.value(), 2.5);
        assert_eq!(dc.fuel_emissions_total().value(), 2500.0);
        assert_eq!(dc.scope3_total.value(), 500000.0);
        assert_eq!(dc.green_energy.value(), 1e6);
        assert_eq!(dc.rec_offset.value(), 2e5);
    }

    #[test]
    fn datacenter_bad_device_cell() {
        let csv = "# schema_version: 1\ndatacenter_id,name,region,grid_intensity,cooling_devices\nDC,N,R,0.4,CRAC_1\n";
        assert!(parse_datacenter_info(csv.as_bytes()).is_err());
        let csv = "# schema_version: 1\ndatacenter_id,name,region,grid_intensity,cooling_devices\nDC,N,R,0.4,A=1;A=2\n";
        assert!(parse_datacenter_info(csv.as_bytes()).is_err());
    }

    #[test]
    fn tenant_with_two_datacenters() {
        let csv = "# schema_version: 1\ntenant_id,display_name,agent_count,datacenter_ids,l_share\n\
                   TENANT_X,Fictitious Co,250,DC_EU1;DC_US1,1.0\n";
        let t = &parse_tenant_info(csv.as_bytes()).unwrap()[0];
        assert_eq!(t.display_name, "Fictitious Co");
        assert_eq!(t.agent_count, 250);
        assert_eq!(t.datacenter_ids, vec!["DC_EU1", "DC_US1"]);
        assert_eq!(t.l_share, Share::ONE);
    }

    #[test]
    fn tenant_l_share_defaults_to_one() {
        let csv = "# schema_version: 1\ntenant_id,display_name,agent_count,datacenter_ids\nT,Co,1,DC\n";
        assert_eq!(parse_tenant_info(csv.as_bytes()).unwrap()[0].l_share, Share::ONE);
    }

    #[test]
    fn duplicate_tenant_id() {
        let csv = "# schema_version: 1\ntenant_id,display_name,agent_count,datacenter_ids\nT,A,1,DC\nT,B,2,DC\n";
        let errs = parse_tenant_info(csv.as_bytes()).unwrap_err();
        assert!(matches!(&errs.0[0], IngestError::DuplicateId { id, location } if id == "T" && location.line == 4));
    }

    #[test]
    fn duplicate_datacenter_id() {
        let csv = "# schema_version: 1\ndatacenter_id,name,region,grid_intensity\nDC,a,b,1\nDC,c,d,2\n";
        assert!(matches!(&parse_datacenter_info(csv.as_bytes()).unwrap_err().0[0], IngestError::DuplicateId { .. }));
    }

    #[test]
    fn tenant_agent_count_must_be_positive() {
        let csv = "# schema_version: 1\ntenant_id,display_name,agent_count,datacenter_ids\nT,A,0,DC\n";
        assert!(matches!(&parse_tenant_info(csv.as_bytes()).unwrap_err().0[0], IngestError::RangeError { .. }));
    }

    #[test]
    fn tenant_id_must_be_a_path_component() {
        let csv = "# schema_version: 1\ntenant_id,display_name,agent_count,datacenter_ids\n../x,X,3,DC\n";
        let errs = parse_tenant_info(csv.as_bytes()).unwrap_err();
        assert!(matches!(&errs.0[0], IngestError::MalformedRow { line: 3, .. }));
    }

    #[test]
    fn repeated_generator_rejected() {
        let csv = "# schema_version: 1\ndatacenter_id,name,region,grid_intensity,fuel_log\nDC,n,r,0.4,G=1@2;G=3@2\n";
        assert!(parse_datacenter_info(csv.as_bytes()).is_err());
    }
}
