use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde_json::Value;
use tcf_core::allocation::{
    compute_footprints, conservation_audit, Footprint, HistoryEntry, HistorySource, MemoryHistory,
};
use tcf_core::ingest::{read_input_dir, RawData, ValidationErrors};
use tcf_core::power::{fit_server_weights, read_calibration_samples, read_models, write_models, ModelSet};
use tcf_core::report::{
    canonical_bytes, diff_json, parse_json, render_json, render_onepage_with, EquivalencyFactors, FsHistoryStore,
    ReportDocument, TrendThresholds,
};
use tcf_core::synth::{generate, SynthConfig};
use tcf_core::units::{EmissionsG, Period, Share};

use crate::{ComputeArgs, EXIT_COMPUTATION, EXIT_MISMATCH, EXIT_VALIDATION};

/// Why a command failed, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Validation(Vec<String>),
    Computation(anyhow::Error),
    Mismatch(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Computation(_) => EXIT_COMPUTATION,
            Failure::Mismatch(_) => EXIT_MISMATCH,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(errors) => {
                writeln!(f, "validation failed with {} error(s):", errors.len())?;
                for e in errors {
                    writeln!(f, "  {e}")?;
                }
                Ok(())
            }
            Failure::Computation(e) => write!(f, "error: {e:#}"),
            Failure::Mismatch(m) => write!(f, "audit mismatch: {m}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Computation(e)
    }
}

type Outcome = Result<(), Failure>;

fn validation(errors: ValidationErrors, file: &Path) -> Vec<String> {
    errors.iter().map(|e| format!("{}: {e}", file.display())).collect()
}

fn load_models(path: &Path, problems: &mut Vec<String>) -> Option<ModelSet> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) => {
            problems.push(format!("{}: {e}", path.display()));
            return None;
        }
    };
    read_models(file).map_err(|e| problems.extend(validation(e, path))).ok()
}

fn load_factors(path: &Path, problems: &mut Vec<String>) -> Option<EquivalencyFactors> {
    EquivalencyFactors::load(path).map_err(|e| problems.push(format!("{}: {e}", path.display()))).ok()
}

fn load_inputs(dir: &Path, period: Period, problems: &mut Vec<String>) -> Option<RawData> {
    read_input_dir(dir, period).map_err(|e| problems.extend(validation(e, dir))).ok()
}

fn write_doc(root: &Path, doc: &ReportDocument) -> anyhow::Result<PathBuf> {
    let path = root.join(doc.relative_path());
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(&path, &doc.content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn thresholds((improving, worsening): (f64, f64)) -> TrendThresholds {
    TrendThresholds { improving, worsening }
}

pub fn calibrate(samples: &Path, models_out: &Path) -> Outcome {
    let file = fs::File::open(samples).map_err(|e| Failure::Validation(vec![format!("{}: {e}", samples.display())]))?;
    let groups = read_calibration_samples(file).map_err(|e| Failure::Validation(validation(e, samples)))?;

    let mut models = ModelSet::new();
    let mut failures = Vec::new();
    for (name, rows) in &groups {
        match fit_server_weights(name, rows) {
            Ok(m) => {
                models.insert(name.clone(), m);
            }
            Err(e) => failures.push(format!("{}: {e}", e.kind())),
        }
    }
    if !failures.is_empty() {
        return Err(Failure::Computation(anyhow!("calibration failed:\n  {}", failures.join("\n  "))));
    }

    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{:<24} {:>8} {:>12}", "device_model", "samples", "adjusted_r2");
    for (name, m) in &models {
        let _ = writeln!(out, "{:<24} {:>8} {:>12.4}", name, groups[name].len(), m.adjusted_r2);
    }
    let sink = fs::File::create(models_out).with_context(|| format!("creating {}", models_out.display()))?;
    write_models(&models, BufWriter::new(sink)).with_context(|| format!("writing {}", models_out.display()))?;
    Ok(())
}

pub fn compute(args: &ComputeArgs) -> Outcome {
    let mut problems = Vec::new();
    let models = load_models(&args.models, &mut problems);
    let factors = load_factors(&args.equivalencies, &mut problems);
    let raw = load_inputs(&args.input_dir, args.period, &mut problems);
    let (Some(models), Some(factors), Some(raw)) = (models, factors, raw) else {
        return Err(Failure::Validation(problems));
    };
    let raw = match args.l_share {
        Some(s) => raw.with_l_share(s),
        None => raw,
    };

    let history = FsHistoryStore::new(&args.history_dir);
    let footprints = compute_footprints(&raw, &models, &history).map_err(|e| anyhow!(e))?;
    let trend = thresholds(args.trend_thresholds);

    let docs: Vec<(ReportDocument, ReportDocument)> = footprints
        .par_iter()
        .map(|fp| (render_json(fp, &factors), render_onepage_with(fp, &factors, &trend)))
        .collect();
    for (json, page) in &docs {
        write_doc(&args.out_dir, json)?;
        write_doc(&args.out_dir, page)?;
        history.store(json).with_context(|| format!("storing history in {}", args.history_dir.display()))?;
    }

    let audit = conservation_audit(&footprints, &raw, &models);
    print_summary(&footprints)?;
    println!(
        "conservation audit: {} checks, max relative residual {:.3e}, {}",
        audit.checks.len(),
        audit.max_residual(),
        if audit.passed() { "PASS" } else { "FAIL" }
    );
    if !audit.passed() {
        for c in audit.failures() {
            eprintln!("{c}");
        }
        return Err(Failure::Mismatch("conservation audit failed".into()));
    }
    Ok(())
}

fn print_summary(footprints: &[Footprint]) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{:<16} {:>4} {:>18} {:>18} {:>14}", "tenant", "dcs", "gross_g", "net_g", "per_agent_g")?;
    for fp in footprints {
        writeln!(
            out,
            "{:<16} {:>4} {:>18.1} {:>18.1} {:>14.3}{}",
            fp.tenant_id,
            fp.per_dc.len(),
            fp.gross_total.value(),
            fp.net_total.value(),
            fp.per_agent.value(),
            if fp.is_over_offset() { "  over-offset" } else { "" }
        )?;
    }
    Ok(())
}

pub fn report(path: &Path, equivalencies: Option<&Path>, out_dir: &Path, trend: (f64, f64)) -> Outcome {
    let content = fs::read(path).map_err(|e| Failure::Validation(vec![format!("{}: {e}", path.display())]))?;
    let parsed = parse_json(&content).map_err(|e| Failure::Validation(vec![format!("{}: {e}", path.display())]))?;
    let factors = match equivalencies {
        Some(p) => {
            let mut problems = Vec::new();
            load_factors(p, &mut problems).ok_or(Failure::Validation(problems))?
        }
        None => parsed.factors,
    };
    let fp = &parsed.footprint;
    for doc in [render_json(fp, &factors), render_onepage_with(fp, &factors, &thresholds(trend))] {
        let written = write_doc(out_dir, &doc)?;
        println!("{}", written.display());
    }
    Ok(())
}

/// History entries read loosely from a report, for audits run without the
/// history store.
fn embedded_history(report: &Value, tenant_id: &str) -> MemoryHistory {
    let mut store = MemoryHistory::default();
    let entries = report["summary"]["history"].as_array().cloned().unwrap_or_default();
    for h in entries {
        let period = h["period"].as_str().and_then(|p| p.parse::<Period>().ok());
        let gross = h["grossEmissions"].as_f64().and_then(|v| EmissionsG::gross(v).ok());
        let net = h["netEmissions"].as_f64().and_then(|v| EmissionsG::net(v).ok());
        if let (Some(period), Some(gross), Some(net)) = (period, gross, net) {
            store.insert(tenant_id, HistoryEntry { period, gross, net });
        }
    }
    store
}

fn embedded_factors(report: &Value) -> Result<EquivalencyFactors, String> {
    let f = &report["equivalencies"]["factors"];
    let num = |key: &str| f[key].as_f64().ok_or_else(|| format!("$.equivalencies.factors.{key}: not a number"));
    let factors = EquivalencyFactors {
        flight_ams_nyc: num("flightAmsNyc")?,
        car_km: num("carKm")?,
        smartphone_charge: num("smartphoneCharge")?,
        source_note: f["sourceNote"].as_str().unwrap_or_default().to_string(),
    };
    factors.validate().map_err(|e| format!("$.equivalencies.factors: {e}"))?;
    Ok(factors)
}

pub fn audit(
    report_path: &Path,
    input_dir: &Path,
    models_path: &Path,
    history_dir: Option<&Path>,
    equivalencies: Option<&Path>,
    l_share: Option<Share>,
) -> Outcome {
    let content =
        fs::read(report_path).map_err(|e| Failure::Validation(vec![format!("{}: {e}", report_path.display())]))?;
    let stored: Value = serde_json::from_slice(&content)
        .map_err(|e| Failure::Validation(vec![format!("{}: {e}", report_path.display())]))?;
    let tenant_id = stored["tenant"]["tenantId"].as_str().map(str::to_string);
    let period = stored["period"].as_str().and_then(|p| p.parse::<Period>().ok());
    let (Some(tenant_id), Some(period)) = (tenant_id, period) else {
        return Err(Failure::Validation(vec![format!(
            "{}: report lacks a readable tenant.tenantId or period",
            report_path.display()
        )]));
    };

    let mut problems = Vec::new();
    let models = load_models(models_path, &mut problems);
    let raw = load_inputs(input_dir, period, &mut problems);
    let factors = match equivalencies {
        Some(p) => load_factors(p, &mut problems),
        None => match embedded_factors(&stored) {
            Ok(f) => Some(f),
            Err(e) => return Err(Failure::Mismatch(e)),
        },
    };
    let (Some(models), Some(raw), Some(factors)) = (models, raw, factors) else {
        return Err(Failure::Validation(problems));
    };
    let raw = match l_share {
        Some(s) => raw.with_l_share(s),
        None => raw,
    };

    let fs_history;
    let memory_history;
    let history: &dyn HistorySource = match history_dir {
        Some(dir) => {
            fs_history = FsHistoryStore::new(dir);
            &fs_history
        }
        None => {
            log::warn!("no --history-dir given; history entries in the report are taken as given");
            memory_history = embedded_history(&stored, &tenant_id);
            &memory_history
        }
    };
    let footprints = compute_footprints(&raw, &models, history).map_err(|e| anyhow!(e))?;
    let Some(fp) = footprints.iter().find(|f| f.tenant_id == tenant_id) else {
        return Err(Failure::Mismatch(format!("tenant {tenant_id:?} is not in the inputs")));
    };
    let expected: Value = serde_json::from_slice(&render_json(fp, &factors).content).expect("rendered JSON parses");

    if canonical_bytes(&expected) == canonical_bytes(&stored) {
        println!("{}: matches recomputation", report_path.display());
        return Ok(());
    }
    let diffs = diff_json(&expected, &stored);
    let mut out = io::stdout().lock();
    for d in &diffs {
        let _ = writeln!(out, "{d}");
    }
    Err(Failure::Mismatch(format!("{} field(s) differ from recomputation", diffs.len())))
}

pub fn synth(seed: u64, tenants: usize, datacenters: usize, period: Period, offsets: bool, out_dir: &Path) -> Outcome {
    if tenants == 0 || datacenters == 0 {
        return Err(Failure::Validation(vec!["--tenants and --datacenters must be at least 1".into()]));
    }
    let mut cfg = SynthConfig::new(seed, tenants, datacenters);
    cfg.period = period;
    cfg.offsets = offsets;
    let fleet = generate(&cfg);
    fleet.write_to(out_dir).with_context(|| format!("writing {}", out_dir.display()))?;
    println!(
        "wrote {} tenants, {} data centers, {} server rows, {} network rows to {}",
        fleet.raw.tenants().len(),
        fleet.raw.datacenters().len(),
        fleet.raw.server_usage().len(),
        fleet.raw.network_usage().len(),
        out_dir.display()
    );
    Ok(())
}
