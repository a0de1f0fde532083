//! Writers for the four input formats. Numbers are written with Rust's
//! shortest round-trip formatting, so parsing the output reproduces every
//! value bit for bit.

use std::io::Write;

use super::table::writer;
use super::{DataCenterRecord, DeviceEnergy, NetworkUsageRow, ServerUsageRow, TenantRecord};

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub fn write_server_usage<W: Write>(rows: &[ServerUsageRow], sink: W) -> std::io::Result<()> {
    let mut w = writer(sink)?;
    w.write_record([
        "datacenter_id",
        "device_id",
        "device_model",
        "tenant_id",
        "cpu_utilization",
        "cache_moved",
        "dram_accessed",
        "disk_moved",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.datacenter_id.clone(),
            r.device_id.clone(),
            r.device_model.clone(),
            r.tenant_id.clone(),
            r.cpu_utilization.to_string(),
            r.cache_moved.to_string(),
            r.dram_accessed.to_string(),
            r.disk_moved.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_network_usage<W: Write>(rows: &[NetworkUsageRow], sink: W) -> std::io::Result<()> {
    let mut w = writer(sink)?;
    w.write_record(["datacenter_id", "device_id", "device_type", "tenant_id", "bytes_sent", "bytes_received"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.datacenter_id.clone(),
            r.device_id.clone(),
            r.device_type.clone(),
            r.tenant_id.clone(),
            r.bytes_sent.to_string(),
            r.bytes_received.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

fn device_list(devices: &[DeviceEnergy]) -> String {
    devices.iter().map(|d| format!("{}={}", d.device_id, d.energy.value())).collect::<Vec<_>>().join(";")
}

pub fn write_datacenter_info<W: Write>(records: &[DataCenterRecord], sink: W) -> std::io::Result<()> {
    let mut w = writer(sink)?;
    w.write_record([
        "datacenter_id",
        "name",
        "region",
        "grid_intensity",
        "cooling_devices",
        "other_devices",
        "fuel_log",
        "scope3_total",
        "green_energy",
        "rec_offset",
    ])
    .map_err(csv_err)?;
    for d in records {
        let fuel = d
            .fuel_log
            .iter()
            .map(|f| format!("{}={}@{}", f.device_id, f.fuel_grams, f.fuel_intensity.value()))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            d.datacenter_id.clone(),
            d.name.clone(),
            d.region.clone(),
            d.grid_intensity.value().to_string(),
            device_list(&d.cooling_devices),
            device_list(&d.other_devices),
            fuel,
            d.scope3_total.value().to_string(),
            d.green_energy.value().to_string(),
            d.rec_offset.value().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_tenant_info<W: Write>(records: &[TenantRecord], sink: W) -> std::io::Result<()> {
    let mut w = writer(sink)?;
    w.write_record(["tenant_id", "display_name", "agent_count", "datacenter_ids", "l_share"]).map_err(csv_err)?;
    for t in records {
        w.write_record([
            t.tenant_id.clone(),
            t.display_name.clone(),
            t.agent_count.to_string(),
            t.datacenter_ids.join(";"),
            t.l_share.value().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::super::{parse_network_usage, parse_server_usage};
    use super::*;
    use proptest::prelude::*;

    fn id() -> impl Strategy<Value = String> {
        "[A-Z][A-Z0-9_]{0,8}"
    }

    proptest! {
        #[test]
        fn server_rows_survive_write_then_parse(
            rows in prop::collection::vec(
                (id(), id(), id(), id(), 0.0f64..=1.0, 0.0f64..1e15, 0.0f64..1e15, 0.0f64..1e15),
                0..8,
            )
        ) {
            let rows: Vec<ServerUsageRow> = rows
                .into_iter()
                .map(|(dc, dev, model, t, u, c, d, k)| ServerUsageRow {
                    datacenter_id: dc, device_id: dev, device_model: model, tenant_id: t,
                    cpu_utilization: u, cache_moved: c, dram_accessed: d, disk_moved: k, line: 0,
                })
                .collect();
            let mut buf = Vec::new();
            write_server_usage(&rows, &mut buf).unwrap();
            let mut parsed = parse_server_usage(buf.as_slice()).unwrap();
            for p in &mut parsed { p.line = 0; }
            prop_assert_eq!(parsed, rows);
        }

        #[test]
        fn network_rows_survive_write_then_parse(
            rows in prop::collection::vec((id(), id(), id(), any::<u64>(), any::<u64>()), 0..8)
        ) {
            let rows: Vec<NetworkUsageRow> = rows
                .into_iter()
                .map(|(dc, dev, t, s, r)| NetworkUsageRow {
                    datacenter_id: dc, device_id: dev, device_type: "router".into(), tenant_id: t,
                    bytes_sent: s, bytes_received: r, line: 0,
                })
                .collect();
            let mut buf = Vec::new();
            write_network_usage(&rows, &mut buf).unwrap();
            let mut parsed = parse_network_usage(buf.as_slice()).unwrap();
            for p in &mut parsed { p.line = 0; }
            prop_assert_eq!(parsed, rows);
        }
    }
}
