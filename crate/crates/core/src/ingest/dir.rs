use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::{
    assemble_raw_data, parse_datacenter_info, parse_network_usage, parse_server_usage, parse_tenant_info,
    write_datacenter_info, write_network_usage, write_server_usage, write_tenant_info, IngestError, RawData,
    ValidationErrors, DATACENTERS_FILE, NETWORK_FILE, SERVERS_FILE, TENANTS_FILE,
};
use crate::units::Period;

fn open(dir: &Path, name: &str, errors: &mut ValidationErrors) -> Option<File> {
    match File::open(dir.join(name)) {
        Ok(f) => Some(f),
        Err(e) => {
            errors.0.push(IngestError::Unreadable { file: name.into(), reason: e.to_string() });
            None
        }
    }
}

fn collect<T>(result: Option<Result<Vec<T>, ValidationErrors>>, errors: &mut ValidationErrors) -> Vec<T> {
    match result {
        Some(Ok(v)) => v,
        Some(Err(e)) => {
            errors.extend(e);
            Vec::new()
        }
        None => Vec::new(),
    }
}

/// Reads the four input files from `dir`. Problems in every file are
/// reported together; cross-file checks run only once each file parses.
pub fn read_input_dir(dir: &Path, period: Period) -> Result<RawData, ValidationErrors> {
    let mut errors = ValidationErrors::default();
    let dcs = open(dir, DATACENTERS_FILE, &mut errors).map(parse_datacenter_info);
    let tenants = open(dir, TENANTS_FILE, &mut errors).map(parse_tenant_info);
    let servers = open(dir, SERVERS_FILE, &mut errors).map(parse_server_usage);
    let network = open(dir, NETWORK_FILE, &mut errors).map(parse_network_usage);
    let dcs = collect(dcs, &mut errors);
    let tenants = collect(tenants, &mut errors);
    let servers = collect(servers, &mut errors);
    let network = collect(network, &mut errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    assemble_raw_data(period, dcs, tenants, servers, network)
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    f(&mut w)?;
    w.flush()
}

/// Writes the four input files into `dir`, creating it if needed.
pub fn write_input_dir(raw: &RawData, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_file(dir, DATACENTERS_FILE, |w| write_datacenter_info(raw.datacenters(), w))?;
    write_file(dir, TENANTS_FILE, |w| write_tenant_info(raw.tenants(), w))?;
    write_file(dir, SERVERS_FILE, |w| write_server_usage(raw.server_usage(), w))?;
    write_file(dir, NETWORK_FILE, |w| write_network_usage(raw.network_usage(), w))
}
