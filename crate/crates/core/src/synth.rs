//! Deterministic synthetic fleets for tests and demos.
//!
//! The same configuration always yields the same fleet, down to the bytes of
//! the files written by [`SynthFleet::write_to`].

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{
    assemble_raw_data, write_input_dir, DataCenterRecord, DeviceEnergy, FuelEntry, NetworkUsageRow, RawData,
    ServerUsageRow, TenantRecord,
};
use crate::power::{write_calibration_samples, write_models, CalibrationSample, ModelSet, ServerPowerModel};
use crate::report::EquivalencyFactors;
use crate::units::{CarbonIntensity, EmissionsG, EnergyWh, Period, Share};

pub const MODELS_FILE: &str = "models.csv";
pub const CALIBRATION_FILE: &str = "calibration.csv";
pub const EQUIVALENCIES_FILE: &str = "equivalencies.toml";

const DEVICE_MODELS: [&str; 3] = ["RACK_A100", "RACK_B200", "BLADE_C1"];
const SAMPLES_PER_MODEL: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub tenants: usize,
    pub datacenters: usize,
    pub period: Period,
    /// Give data centers green energy and certificates.
    pub offsets: bool,
}

impl SynthConfig {
    pub fn new(seed: u64, tenants: usize, datacenters: usize) -> Self {
        SynthConfig {
            seed,
            tenants: tenants.max(1),
            datacenters: datacenters.max(1),
            period: Period::new(2024, 1).expect("valid period"),
            offsets: true,
        }
    }
}

/// A generated input set with the power models that explain it.
#[derive(Debug, Clone)]
pub struct SynthFleet {
    pub raw: RawData,
    pub models: ModelSet,
    /// Noiseless benchmark samples from which `models` can be refitted.
    pub calibration: BTreeMap<String, Vec<CalibrationSample>>,
    pub factors: EquivalencyFactors,
}

/// Factors used by generated fleets. Test data only.
pub fn synthetic_factors() -> EquivalencyFactors {
    EquivalencyFactors {
        flight_ams_nyc: 865_800.0,
        car_km: 248.5,
        smartphone_charge: 8.22,
        source_note: "Synthetic fleet; copy of the sample configuration values.".into(),
    }
}

fn model(rng: &mut ChaCha8Rng, name: &str) -> ServerPowerModel {
    ServerPowerModel {
        device_model: name.into(),
        intercept: rng.random_range(20.0..200.0),
        w_cpu: rng.random_range(100.0..900.0),
        w_cache: rng.random_range(1e-7..1e-6),
        w_dram: rng.random_range(1e-9..5e-9),
        w_disk: rng.random_range(1e-10..1e-9),
        adjusted_r2: 1.0,
    }
}

struct Counters {
    cpu: f64,
    cache: f64,
    dram: f64,
    disk: f64,
}

fn counters(rng: &mut ChaCha8Rng) -> Counters {
    Counters {
        cpu: rng.random_range(0.0..=1.0),
        cache: rng.random_range(0.0..1e9),
        dram: rng.random_range(0.0..1e10),
        disk: rng.random_range(0.0..1e11),
    }
}

fn devices(
    rng: &mut ChaCha8Rng,
    prefix: &str,
    dc: usize,
    max: usize,
    range: std::ops::Range<f64>,
) -> Vec<DeviceEnergy> {
    (0..rng.random_range(0..=max))
        .map(|i| DeviceEnergy {
            device_id: format!("{prefix}_{dc:02}_{i}"),
            energy: EnergyWh::new(rng.random_range(range.clone())).expect("positive"),
        })
        .collect()
}

/// Builds a fleet in which every data center has at least one tenant with
/// server usage, so every shared split is well defined.
pub fn generate(cfg: &SynthConfig) -> SynthFleet {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let models: ModelSet = DEVICE_MODELS.iter().map(|n| (n.to_string(), model(&mut rng, n))).collect();
    let calibration = models
        .values()
        .map(|m| {
            let samples = (0..SAMPLES_PER_MODEL)
                .map(|_| {
                    let c = counters(&mut rng);
                    CalibrationSample {
                        cpu_utilization: c.cpu,
                        cache_moved: c.cache,
                        dram_accessed: c.dram,
                        disk_moved: c.disk,
                        measured_energy: EnergyWh::new(m.predict(c.cpu, c.cache, c.dram, c.disk)).expect("positive"),
                    }
                })
                .collect();
            (m.device_model.clone(), samples)
        })
        .collect();

    let datacenters: Vec<DataCenterRecord> = (0..cfg.datacenters)
        .map(|d| {
            let fuel_log = (0..rng.random_range(0..=1))
                .map(|i| FuelEntry {
                    device_id: format!("GEN_{d:02}_{i}"),
                    fuel_grams: rng.random_range(0.0..50_000.0),
                    fuel_intensity: CarbonIntensity::new(rng.random_range(2.5..3.3)).expect("positive"),
                })
                .collect();
            let (green, rec) = if cfg.offsets {
                (rng.random_range(0.0..20_000.0), rng.random_range(0.0..5_000.0))
            } else {
                (0.0, 0.0)
            };
            DataCenterRecord {
                datacenter_id: format!("DC_{d:02}"),
                name: format!("Site {d}"),
                region: ["EU", "US", "APAC"][d % 3].into(),
                grid_intensity: CarbonIntensity::new(rng.random_range(0.02..0.8)).expect("positive"),
                cooling_devices: devices(&mut rng, "CRAC", d, 2, 500.0..50_000.0),
                other_devices: devices(&mut rng, "UPS", d, 2, 100.0..10_000.0),
                fuel_log,
                scope3_total: EmissionsG::gross(rng.random_range(0.0..1e6)).expect("finite"),
                green_energy: EnergyWh::new(green).expect("positive"),
                rec_offset: EmissionsG::gross(rec).expect("finite"),
                line: 0,
            }
        })
        .collect();

    let dc_ids: Vec<String> = datacenters.iter().map(|d| d.datacenter_id.clone()).collect();
    let mut tenants: Vec<TenantRecord> = (0..cfg.tenants)
        .map(|t| {
            let k = rng.random_range(1..=dc_ids.len().min(3));
            let mut ids: Vec<String> = dc_ids.choose_multiple(&mut rng, k).cloned().collect();
            ids.sort();
            TenantRecord {
                tenant_id: format!("T{t:03}"),
                display_name: format!("Tenant {t}"),
                agent_count: rng.random_range(1..=5_000),
                datacenter_ids: ids,
                l_share: Share::ONE,
                line: 0,
            }
        })
        .collect();
    for id in &dc_ids {
        if !tenants.iter().any(|t| t.datacenter_ids.contains(id)) {
            let t = rng.random_range(0..tenants.len());
            tenants[t].datacenter_ids.push(id.clone());
            tenants[t].datacenter_ids.sort();
        }
    }

    let mut servers = Vec::new();
    let mut network = Vec::new();
    for (d, dc) in dc_ids.iter().enumerate() {
        let routers: Vec<String> = (0..rng.random_range(1..=3)).map(|i| format!("NET_{d:02}_{i}")).collect();
        let mut next_server = 0;
        for t in tenants.iter().filter(|t| t.datacenter_ids.contains(dc)) {
            for _ in 0..rng.random_range(1..=4) {
                let c = counters(&mut rng);
                servers.push(ServerUsageRow {
                    datacenter_id: dc.clone(),
                    device_id: format!("SRV_{d:02}_{next_server:04}"),
                    device_model: DEVICE_MODELS.choose(&mut rng).expect("non-empty").to_string(),
                    tenant_id: t.tenant_id.clone(),
                    cpu_utilization: c.cpu,
                    cache_moved: c.cache,
                    dram_accessed: c.dram,
                    disk_moved: c.disk,
                    line: 0,
                });
                next_server += 1;
            }
            let mut used = routers.clone();
            used.shuffle(&mut rng);
            used.truncate(rng.random_range(0..=routers.len()));
            for r in used {
                network.push(NetworkUsageRow {
                    datacenter_id: dc.clone(),
                    device_id: r,
                    device_type: "router".into(),
                    tenant_id: t.tenant_id.clone(),
                    // Even counts keep halving exact.
                    bytes_sent: 2 * rng.random_range(0..500_000_000_000u64),
                    bytes_received: 2 * rng.random_range(0..500_000_000_000u64),
                    line: 0,
                });
            }
        }
    }

    let raw =
        assemble_raw_data(cfg.period, datacenters, tenants, servers, network).expect("generated fleet is consistent");
    SynthFleet { raw, models, calibration, factors: synthetic_factors() }
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    f(&mut w)?;
    w.flush()
}

impl SynthFleet {
    /// Writes the four input files plus `models.csv`, `calibration.csv` and
    /// `equivalencies.toml`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_input_dir(&self.raw, dir)?;
        write_file(dir, MODELS_FILE, |w| write_models(&self.models, w))?;
        write_file(dir, CALIBRATION_FILE, |w| write_calibration_samples(&self.calibration, w))?;
        fs::write(dir.join(EQUIVALENCIES_FILE), self.factors.to_toml_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{compute_footprints, conservation_audit, NoHistory};
    use crate::power::fit_server_weights;

    #[test]
    fn same_seed_same_fleet() {
        let a = generate(&SynthConfig::new(7, 6, 3));
        let b = generate(&SynthConfig::new(7, 6, 3));
        assert_eq!(a.raw, b.raw);
        assert_ne!(a.raw, generate(&SynthConfig::new(8, 6, 3)).raw);
    }

    #[test]
    fn every_datacenter_has_usage() {
        for seed in 0..20 {
            let f = generate(&SynthConfig::new(seed, 2, 5));
            for dc in f.raw.datacenters() {
                assert!(f.raw.server_usage().iter().any(|s| s.datacenter_id == dc.datacenter_id));
            }
        }
    }

    #[test]
    fn fleet_computes_and_passes_audit() {
        let f = generate(&SynthConfig::new(42, 5, 3));
        let fps = compute_footprints(&f.raw, &f.models, &NoHistory).unwrap();
        assert_eq!(fps.len(), 5);
        let audit = conservation_audit(&fps, &f.raw, &f.models);
        assert!(audit.passed(), "{:?}", audit.failures().collect::<Vec<_>>());
    }

    #[test]
    fn single_tenant_gets_everything() {
        let f = generate(&SynthConfig::new(3, 1, 1));
        let fps = compute_footprints(&f.raw, &f.models, &NoHistory).unwrap();
        assert_eq!(fps[0].per_dc[0].ratio.lambda, Share::ONE);
    }

    #[test]
    fn calibration_refits_models() {
        let f = generate(&SynthConfig::new(1, 1, 1));
        for (name, samples) in &f.calibration {
            let fitted = fit_server_weights(name, samples).unwrap();
            let truth = &f.models[name];
            assert!((fitted.w_cpu - truth.w_cpu).abs() <= 1e-6 * truth.w_cpu);
            assert!((fitted.adjusted_r2 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn network_bytes_even() {
        let f = generate(&SynthConfig::new(11, 10, 4));
        assert!(f.raw.network_usage().iter().all(|n| n.bytes_sent % 2 == 0 && n.bytes_received % 2 == 0));
    }
}
