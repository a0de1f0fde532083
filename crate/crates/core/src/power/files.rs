//! Calibration-sample and calibrated-model CSV files.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{CalibrationSample, ServerPowerModel};
use crate::ingest::table::{writer, Table};
use crate::ingest::{IngestError, Location, ValidationErrors};
use crate::units::EnergyWh;

/// Calibrated models keyed by device model name.
pub type ModelSet = BTreeMap<String, ServerPowerModel>;

pub const SAMPLES_FILE: &str = "calibration.csv";
pub const MODELS_FILE: &str = "models.csv";

const SAMPLE_COLUMNS: &[&str] =
    &["device_model", "cpu_utilization", "cache_moved", "dram_accessed", "disk_moved", "measured_energy_wh"];
const MODEL_COLUMNS: &[&str] = &["device_model", "intercept", "w_cpu", "w_cache", "w_dram", "w_disk", "adjusted_r2"];

/// Reads benchmark samples grouped by device model, in file order.
pub fn read_calibration_samples<R: Read>(
    source: R,
) -> Result<BTreeMap<String, Vec<CalibrationSample>>, ValidationErrors> {
    let (table, mut errors) = Table::read(source, SAMPLES_FILE, SAMPLE_COLUMNS)?;
    let mut out: BTreeMap<String, Vec<CalibrationSample>> = BTreeMap::new();
    for row in &table.rows {
        let c = table.cells(row);
        let sample = (|| {
            let cpu = c.real("cpu_utilization")?;
            if !(0.0..=1.0).contains(&cpu) {
                return Err(c.range("cpu_utilization", cpu, "within [0, 1]"));
            }
            let energy = c.non_negative("measured_energy_wh")?;
            Ok((
                c.text("device_model")?,
                CalibrationSample {
                    cpu_utilization: cpu,
                    cache_moved: c.non_negative("cache_moved")?,
                    dram_accessed: c.non_negative("dram_accessed")?,
                    disk_moved: c.non_negative("disk_moved")?,
                    measured_energy: EnergyWh::new(energy).map_err(|e| c.malformed(e.to_string()))?,
                },
            ))
        })();
        match sample {
            Ok((model, s)) => out.entry(model).or_default().push(s),
            Err(e) => errors.0.push(e),
        }
    }
    errors.into_result(out)
}

pub fn write_calibration_samples<W: Write>(
    samples: &BTreeMap<String, Vec<CalibrationSample>>,
    sink: W,
) -> std::io::Result<()> {
    let mut w = writer(sink)?;
    w.write_record(SAMPLE_COLUMNS).map_err(std::io::Error::other)?;
    for (model, rows) in samples {
        for s in rows {
            w.write_record([
                model.clone(),
                s.cpu_utilization.to_string(),
                s.cache_moved.to_string(),
                s.dram_accessed.to_string(),
                s.disk_moved.to_string(),
                s.measured_energy.value().to_string(),
            ])
            .map_err(std::io::Error::other)?;
        }
    }
    w.flush()
}

/// Reads a calibrated model file. Coefficients round-trip bit for bit.
pub fn read_models<R: Read>(source: R) -> Result<ModelSet, ValidationErrors> {
    let (table, mut errors) = Table::read(source, MODELS_FILE, MODEL_COLUMNS)?;
    let mut out = ModelSet::new();
    for row in &table.rows {
        let c = table.cells(row);
        let model = (|| {
            let adjusted_r2 = c.real("adjusted_r2")?;
            if adjusted_r2 > 1.0 {
                return Err(c.range("adjusted_r2", adjusted_r2, "<= 1"));
            }
            Ok(ServerPowerModel {
                device_model: c.text("device_model")?,
                intercept: c.real("intercept")?,
                w_cpu: c.real("w_cpu")?,
                w_cache: c.real("w_cache")?,
                w_dram: c.real("w_dram")?,
                w_disk: c.real("w_disk")?,
                adjusted_r2,
            })
        })();
        match model {
            Ok(m) => {
                if out.contains_key(&m.device_model) {
                    errors.0.push(IngestError::DuplicateId {
                        id: m.device_model.clone(),
                        location: Location::new(MODELS_FILE, c.line()),
                    });
                } else {
                    out.insert(m.device_model.clone(), m);
                }
            }
            Err(e) => errors.0.push(e),
        }
    }
    errors.into_result(out)
}

pub fn write_models<W: Write>(models: &ModelSet, sink: W) -> std::io::Result<()> {
    let mut w = writer(sink)?;
    w.write_record(MODEL_COLUMNS).map_err(std::io::Error::other)?;
    for m in models.values() {
        w.write_record([
            m.device_model.clone(),
            m.intercept.to_string(),
            m.w_cpu.to_string(),
            m.w_cache.to_string(),
            m.w_dram.to_string(),
            m.w_disk.to_string(),
            m.adjusted_r2.to_string(),
        ])
        .map_err(std::io::Error::other)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn models_round_trip_at_full_precision(
            coef in prop::array::uniform5(-1e6f64..1e6),
            r2 in -5.0f64..=1.0,
        ) {
            let mut set = ModelSet::new();
            set.insert("M".into(), ServerPowerModel {
                device_model: "M".into(),
                intercept: coef[0], w_cpu: coef[1], w_cache: coef[2] * 1e-12,
                w_dram: coef[3] * 1e-15, w_disk: coef[4], adjusted_r2: r2,
            });
            let mut buf = Vec::new();
            write_models(&set, &mut buf).unwrap();
            prop_assert_eq!(read_models(buf.as_slice()).unwrap(), set);
        }
    }

    #[test]
    fn duplicate_model_rejected() {
        let csv = "# schema_version: 1\ndevice_model,intercept,w_cpu,w_cache,w_dram,w_disk,adjusted_r2\n\
                   M,1,2,3,4,5,0.9\nM,1,2,3,4,5,0.9\n";
        assert!(read_models(csv.as_bytes()).is_err());
    }

    #[test]
    fn samples_grouped_by_model() {
        let csv = "# schema_version: 1\n\
                   device_model,cpu_utilization,cache_moved,dram_accessed,disk_moved,measured_energy_wh\n\
                   A,0.1,1,2,3,10\nB,0.2,1,2,3,20\nA,0.3,1,2,3,30\n";
        let s = read_calibration_samples(csv.as_bytes()).unwrap();
        assert_eq!(s["A"].len(), 2);
        assert_eq!(s["A"][1].measured_energy.value(), 30.0);
        assert_eq!(s["B"].len(), 1);
    }

    #[test]
    fn negative_energy_sample_rejected() {
        let csv = "# schema_version: 1\n\
                   device_model,cpu_utilization,cache_moved,dram_accessed,disk_moved,measured_energy_wh\n\
                   A,0.1,1,2,3,-10\n";
        assert!(read_calibration_samples(csv.as_bytes()).is_err());
    }
}
