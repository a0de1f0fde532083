//! `tcf`: per-tenant carbon footprint reports for shared data centers.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcf_core::units::{Period, Share};

/// Exit codes.
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_COMPUTATION: u8 = 2;
pub const EXIT_MISMATCH: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "tcf", version, about = "Tenant carbon footprints for multi-tenant data centers")]
struct Cli {
    /// Worker threads for per-tenant work (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a server power model per device model from benchmark samples.
    Calibrate {
        /// Benchmark samples CSV.
        #[arg(long)]
        samples: PathBuf,
        /// Where to write the fitted models CSV.
        #[arg(long)]
        models: PathBuf,
    },
    /// Compute footprints for a period and write JSON and one-page reports.
    Compute(ComputeArgs),
    /// Re-render reports from an existing JSON report without recomputing.
    Report {
        /// JSON report to re-render.
        #[arg(long)]
        report: PathBuf,
        /// Equivalency factors to use instead of those stored in the report.
        #[arg(long)]
        equivalencies: Option<PathBuf>,
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
        /// Percent changes for the improving and worsening badges.
        #[arg(long, value_parser = parse_thresholds, default_value = "-5,5", allow_hyphen_values = true)]
        trend_thresholds: (f64, f64),
    },
    /// Recompute a report from its inputs and diff it field by field.
    Audit {
        /// JSON report to check.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        input_dir: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// History store used when the report was computed. Without it the
        /// history entries inside the report are taken as given.
        #[arg(long)]
        history_dir: Option<PathBuf>,
        /// Equivalency factors to use instead of those stored in the report.
        #[arg(long)]
        equivalencies: Option<PathBuf>,
        /// L_share override used when the report was computed.
        #[arg(long, value_parser = parse_share)]
        l_share: Option<Share>,
    },
    /// Write a deterministic synthetic input set.
    Synth {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        tenants: usize,
        #[arg(long, default_value_t = 3)]
        datacenters: usize,
        #[arg(long, default_value = "2024-01")]
        period: Period,
        /// Leave green energy and certificates at zero.
        #[arg(long)]
        no_offsets: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// Reporting month, YYYY-MM.
    #[arg(long)]
    pub period: Period,
    /// Directory holding servers.csv, network.csv, datacenters.csv and tenants.csv.
    #[arg(long)]
    pub input_dir: PathBuf,
    /// Fitted server power models CSV.
    #[arg(long)]
    pub models: PathBuf,
    /// Equivalency factors TOML.
    #[arg(long)]
    pub equivalencies: PathBuf,
    #[arg(long, default_value = "history")]
    pub history_dir: PathBuf,
    #[arg(long, default_value = "reports")]
    pub out_dir: PathBuf,
    /// Apply this L_share to every tenant.
    #[arg(long, value_parser = parse_share)]
    pub l_share: Option<Share>,
    /// Percent changes for the improving and worsening badges.
    #[arg(long, value_parser = parse_thresholds, default_value = "-5,5", allow_hyphen_values = true)]
    pub trend_thresholds: (f64, f64),
}

fn parse_share(s: &str) -> Result<Share, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    Share::new(v).map_err(|e| e.to_string())
}

fn parse_thresholds(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected IMPROVING,WORSENING, e.g. -5,5")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(a.is_finite() && b.is_finite() && a <= 0.0 && b >= 0.0) {
        return Err("need IMPROVING <= 0 <= WORSENING".into());
    }
    Ok((a, b))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        pool = pool.num_threads(n.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_COMPUTATION);
        }
    };

    let result = pool.install(|| match cli.command {
        Command::Calibrate { samples, models } => commands::calibrate(&samples, &models),
        Command::Compute(args) => commands::compute(&args),
        Command::Report { report, equivalencies, out_dir, trend_thresholds } => {
            commands::report(&report, equivalencies.as_deref(), &out_dir, trend_thresholds)
        }
        Command::Audit { report, input_dir, models, history_dir, equivalencies, l_share } => {
            commands::audit(&report, &input_dir, &models, history_dir.as_deref(), equivalencies.as_deref(), l_share)
        }
        Command::Synth { seed, tenants, datacenters, period, no_offsets, out_dir } => {
            commands::synth(seed, tenants, datacenters, period, !no_offsets, &out_dir)
        }
    });

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
