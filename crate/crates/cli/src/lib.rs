//! Experiment runner: one subcommand per verification campaign, each seeded
//! and emitting a result table plus a run manifest.

pub mod campaigns;
pub mod config;
pub mod table;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use campaigns::{Check, Outcome};
pub use config::{Cli, ExperimentConfig};
use config::{parse_bins, BinSpec, Campaign, Format};
use table::{Table, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

struct Defaults {
    n: usize,
    samples: usize,
    points: &'static [f64],
    t_grid: &'static [f64],
    bins: &'static str,
}

fn defaults(c: Campaign, k: Option<usize>) -> Defaults {
    const NONE: Defaults = Defaults { n: 0, samples: 1, points: &[], t_grid: &[], bins: "" };
    match c {
        Campaign::PfaffianSelftest => Defaults { samples: 20, ..NONE },
        Campaign::KernelTable => Defaults {
            points: &[0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0],
            ..NONE
        },
        Campaign::McSpins => Defaults { n: 100, samples: 4000, points: &[0.0, 0.5], ..NONE },
        Campaign::McDensity => Defaults { n: 100, samples: 4000, bins: "-0.6:-0.2:2;0.2:0.6:2", ..NONE },
        Campaign::Lemma1 => Defaults { n: 10, samples: 400_000, points: &[-0.5, 0.3, -0.3, 0.5, 0.0, 1.0], ..NONE },
        Campaign::MatrixIntegral if k == Some(4) => Defaults {
            samples: 20_000,
            points: &[-0.9, -0.3, 0.2, 0.8, -0.6, -0.1, 0.5, 1.2, -1.1, -0.5, 0.1, 0.4],
            t_grid: &[0.5, 1.0, 2.0, 4.0],
            ..NONE
        },
        Campaign::MatrixIntegral => Defaults {
            points: &[0.0, 0.3, 0.0, 0.6, -0.4, 0.5, 0.2, 1.4, -1.0, 0.2],
            t_grid: &[0.25, 0.5, 1.0, 2.0, 4.0],
            ..NONE
        },
        Campaign::StationaryPhase => Defaults {
            points: &[-1.3, -0.6, -0.1, 0.4, 0.9, 1.7],
            t_grid: &[0.05, 0.1, 0.3, 1.0],
            ..NONE
        },
        Campaign::HeatCheck => Defaults { points: &[-0.3, 0.5], t_grid: &[0.1, 0.05, 0.025], ..NONE },
    }
}

/// Fills campaign defaults into the parsed flags and validates the result.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let c = cli.command;
    let d = defaults(c, cli.k);
    let points = cli.points.clone().unwrap_or_else(|| d.points.to_vec());
    let t_grid = cli.t_grid.clone().unwrap_or_else(|| d.t_grid.to_vec());
    let bins: Vec<BinSpec> = match &cli.bins {
        Some(b) => parse_bins(b).map_err(|e| usage(format!("--bins: {e}")))?,
        None if d.bins.is_empty() => Vec::new(),
        None => parse_bins(d.bins).expect("default bins parse"),
    };
    let k = match c {
        Campaign::PfaffianSelftest => 0,
        Campaign::KernelTable => 1,
        Campaign::McDensity => bins.len(),
        Campaign::Lemma1 | Campaign::MatrixIntegral => cli.k.unwrap_or(2),
        _ => cli.k.unwrap_or(points.len()),
    };
    let cfg = ExperimentConfig {
        subcommand: c,
        seed: cli.seed,
        samples: cli.samples.unwrap_or(d.samples),
        n: cli.n.unwrap_or(d.n),
        k,
        points,
        t_grid,
        bins,
        out_path: cli.out.clone(),
        format: cli.format,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    if let Some(bad) = cfg.points.iter().find(|p| !p.is_finite()) {
        return Err(usage(format!("--points: {bad} is not finite")));
    }
    if let Some(bad) = cfg.t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(usage(format!("--t-grid: {bad} is not a positive time")));
    }
    let needs_points = !matches!(cfg.subcommand, Campaign::PfaffianSelftest | Campaign::McDensity);
    if needs_points && cfg.points.is_empty() {
        return Err(usage("--points must not be empty"));
    }
    let needs_n = matches!(cfg.subcommand, Campaign::McSpins | Campaign::McDensity | Campaign::Lemma1);
    if needs_n && cfg.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let needs_t = matches!(cfg.subcommand, Campaign::MatrixIntegral | Campaign::StationaryPhase | Campaign::HeatCheck);
    if needs_t && cfg.t_grid.is_empty() {
        return Err(usage("--t-grid must not be empty"));
    }
    if needs_points && cfg.k != 0 && !cfg.points.len().is_multiple_of(cfg.k) {
        return Err(usage(format!("--points: {} values do not split into groups of --k {}", cfg.points.len(), cfg.k)));
    }
    let even_k = matches!(
        cfg.subcommand,
        Campaign::McSpins | Campaign::McDensity | Campaign::Lemma1 | Campaign::MatrixIntegral | Campaign::StationaryPhase | Campaign::HeatCheck
    );
    if even_k && (cfg.k == 0 || !cfg.k.is_multiple_of(2)) {
        return Err(usage(format!("--k must be even and positive, got {}", cfg.k)));
    }
    let ordered = matches!(
        cfg.subcommand,
        Campaign::Lemma1 | Campaign::MatrixIntegral | Campaign::StationaryPhase | Campaign::HeatCheck
    );
    if ordered {
        for (i, x) in cfg.configurations().iter().enumerate() {
            if x.windows(2).any(|w| w[1] <= w[0]) {
                return Err(usage(format!("--points: configuration {i} ({x:?}) is not strictly increasing")));
            }
        }
    }
    match cfg.subcommand {
        Campaign::Lemma1 if cfg.k >= cfg.n => Err(usage(format!("--k {} must be below --n {}", cfg.k, cfg.n))),
        Campaign::Lemma1 => {
            for x in cfg.configurations() {
                if x.windows(2).any(|w| w[1] - w[0] <= campaigns::LEMMA1_BIN_WIDTH) {
                    return Err(usage(format!("--points: spacing in {x:?} must exceed the bin width {}", campaigns::LEMMA1_BIN_WIDTH)));
                }
            }
            Ok(())
        }
        Campaign::MatrixIntegral if cfg.k != 2 && cfg.samples < 100 => {
            Err(usage("--samples must be at least 100 for Monte Carlo integrals"))
        }
        Campaign::McSpins if cfg.samples < ginoe_core::sampler::MIN_SPIN_SAMPLES => {
            Err(usage(format!("--samples must be at least {}", ginoe_core::sampler::MIN_SPIN_SAMPLES)))
        }
        Campaign::StationaryPhase if cfg.k > ginoe_core::stationary::MAX_POINTS => {
            Err(usage(format!("--k is capped at {}", ginoe_core::stationary::MAX_POINTS)))
        }
        Campaign::StationaryPhase if cfg.points.len() != cfg.k => Err(usage("stationary-phase takes one configuration")),
        Campaign::HeatCheck if cfg.points.len() != cfg.k => Err(usage("heat-check takes one configuration")),
        Campaign::McDensity if cfg.bins.is_empty() || cfg.bins.len() > 4 => {
            Err(usage("--bins needs an even number of coordinates, at most 4"))
        }
        Campaign::McDensity => {
            let mut ranges: Vec<(f64, f64)> = cfg.bins.iter().map(|b| (b.lo, b.hi)).collect();
            ranges.sort_by(|a, b| a.0.total_cmp(&b.0));
            if ranges.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(usage("--bins: coordinate ranges must not overlap"));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub results_file: Option<PathBuf>,
}

impl RunManifest {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn write_table(table: &Table, format: Format, w: &mut impl Write) -> std::io::Result<()> {
    match format {
        Format::Csv => table.write_csv(w),
        Format::Json => table.write_json(w),
    }
}

/// Runs the configured campaign and writes its outputs. The result table goes
/// to `<out>/<campaign>.<csv|json>` and the manifest next to it, or the table
/// to stdout when no output directory is set.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let Outcome { table, checks } = campaigns::execute(cfg)?;
    let wall_time_seconds = start.elapsed().as_secs_f64();
    let name = cfg.subcommand.name();
    let results_file = cfg.out_path.as_ref().map(|d| d.join(format!("{name}.{}", cfg.format.extension())));
    let manifest = RunManifest {
        tool: "ginoe-lab",
        version: env!("CARGO_PKG_VERSION"),
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        wall_time_seconds,
        passed: checks.iter().all(|c| c.passed),
        checks,
        results_file: results_file.clone(),
    };
    match (&cfg.out_path, &results_file) {
        (Some(dir), Some(file)) => {
            fs::create_dir_all(dir)?;
            let mut f = std::io::BufWriter::new(fs::File::create(file)?);
            write_table(&table, cfg.format, &mut f)?;
            f.flush()?;
            let m = fs::File::create(dir.join(format!("{name}.manifest.json")))?;
            serde_json::to_writer_pretty(m, &manifest).map_err(std::io::Error::from)?;
        }
        _ => write_table(&table, cfg.format, &mut std::io::stdout().lock())?,
    }
    Ok(manifest)
}
