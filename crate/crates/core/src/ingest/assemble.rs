use std::collections::{BTreeMap, BTreeSet};

use super::{
    DataCenterRecord, IngestError, Location, NetworkUsageRow, RawData, ServerUsageRow, TenantRecord, ValidationErrors,
    DATACENTERS_FILE, NETWORK_FILE, SERVERS_FILE, TENANTS_FILE,
};
use crate::units::Period;

/// Cross-checks the parsed inputs of one period and builds [`RawData`].
///
/// All violations are collected; the input is accepted only if there are none.
pub fn assemble_raw_data(
    period: Period,
    mut datacenters: Vec<DataCenterRecord>,
    mut tenants: Vec<TenantRecord>,
    mut server_usage: Vec<ServerUsageRow>,
    mut network_usage: Vec<NetworkUsageRow>,
) -> Result<RawData, ValidationErrors> {
    let mut errors = ValidationErrors::default();

    let mut dc_ids = BTreeSet::new();
    for d in &datacenters {
        if !dc_ids.insert(d.datacenter_id.as_str()) {
            errors.0.push(IngestError::DuplicateId {
                id: d.datacenter_id.clone(),
                location: Location::new(DATACENTERS_FILE, d.line),
            });
        }
    }

    let mut tenant_dcs: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for t in &tenants {
        let location = Location::new(TENANTS_FILE, t.line);
        if tenant_dcs.contains_key(t.tenant_id.as_str()) {
            errors.0.push(IngestError::DuplicateId { id: t.tenant_id.clone(), location: location.clone() });
            continue;
        }
        if t.datacenter_ids.is_empty() {
            errors.0.push(IngestError::NoDataCenters { tenant_id: t.tenant_id.clone(), location: location.clone() });
        }
        let mut listed = BTreeSet::new();
        for dc in &t.datacenter_ids {
            if !dc_ids.contains(dc.as_str()) {
                errors.0.push(IngestError::UnknownDataCenter { id: dc.clone(), location: location.clone() });
            }
            if !listed.insert(dc.as_str()) {
                errors.0.push(IngestError::DuplicateId { id: dc.clone(), location: location.clone() });
            }
        }
        tenant_dcs.insert(t.tenant_id.as_str(), listed);
    }

    let mut check_usage = |file: &'static str, line: usize, dc: &str, tenant: &str, device: &str| {
        let location = Location::new(file, line);
        if !dc_ids.contains(dc) {
            errors.0.push(IngestError::UnknownDataCenter { id: dc.to_string(), location: location.clone() });
        }
        match tenant_dcs.get(tenant) {
            None => errors.0.push(IngestError::UnknownTenant { id: tenant.to_string(), location }),
            Some(listed) if dc_ids.contains(dc) && !listed.contains(dc) => errors.0.push(IngestError::OrphanUsage {
                device_id: device.to_string(),
                tenant_id: tenant.to_string(),
                datacenter_id: dc.to_string(),
                location,
            }),
            Some(_) => {}
        }
    };
    for r in &server_usage {
        check_usage(SERVERS_FILE, r.line, &r.datacenter_id, &r.tenant_id, &r.device_id);
    }
    for r in &network_usage {
        check_usage(NETWORK_FILE, r.line, &r.datacenter_id, &r.tenant_id, &r.device_id);
    }

    // a server belongs to exactly one tenant per period
    let mut servers: BTreeMap<(&str, &str), &ServerUsageRow> = BTreeMap::new();
    for r in &server_usage {
        match servers.get(&(r.datacenter_id.as_str(), r.device_id.as_str())) {
            None => {
                servers.insert((&r.datacenter_id, &r.device_id), r);
            }
            Some(first) if first.tenant_id == r.tenant_id => errors.0.push(IngestError::DuplicateDevice {
                datacenter_id: r.datacenter_id.clone(),
                device_id: r.device_id.clone(),
                tenant_id: r.tenant_id.clone(),
                location: Location::new(SERVERS_FILE, r.line),
            }),
            Some(first) => errors.0.push(IngestError::SharedServerDevice {
                datacenter_id: r.datacenter_id.clone(),
                device_id: r.device_id.clone(),
                first: first.tenant_id.clone(),
                second: r.tenant_id.clone(),
                location: Location::new(SERVERS_FILE, r.line),
            }),
        }
    }

    // network devices may be shared, one row per (device, tenant)
    let mut ports = BTreeSet::new();
    for r in &network_usage {
        if !ports.insert((r.datacenter_id.as_str(), r.device_id.as_str(), r.tenant_id.as_str())) {
            errors.0.push(IngestError::DuplicateDevice {
                datacenter_id: r.datacenter_id.clone(),
                device_id: r.device_id.clone(),
                tenant_id: r.tenant_id.clone(),
                location: Location::new(NETWORK_FILE, r.line),
            });
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }

    datacenters.sort_by(|a, b| a.datacenter_id.cmp(&b.datacenter_id));
    tenants.sort_by(|a, b| a.tenant_id.cmp(&b.tenant_id));
    for t in &mut tenants {
        t.datacenter_ids.sort();
    }
    for d in &mut datacenters {
        d.cooling_devices.sort_by(|a, b| a.device_id.cmp(&b.device_id));
        d.other_devices.sort_by(|a, b| a.device_id.cmp(&b.device_id));
        d.fuel_log.sort_by(|a, b| a.device_id.cmp(&b.device_id));
    }
    server_usage.sort_by(|a, b| {
        (&a.datacenter_id, &a.device_id, &a.tenant_id).cmp(&(&b.datacenter_id, &b.device_id, &b.tenant_id))
    });
    network_usage.sort_by(|a, b| {
        (&a.datacenter_id, &a.device_id, &a.tenant_id).cmp(&(&b.datacenter_id, &b.device_id, &b.tenant_id))
    });

    Ok(RawData { period, datacenters, tenants, server_usage, network_usage })
}
