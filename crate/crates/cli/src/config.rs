use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Seed used when neither `--seed` nor `GINOE_SEED` is given.
pub const DEFAULT_SEED: u64 = 1;

/// Reproducible verification campaigns for the real Ginibre ensemble.
///
/// Every flag can also be set through the environment variable named in its
/// help text; a flag on the command line takes precedence over the
/// environment, which takes precedence over the built-in default.
#[derive(Debug, Clone, Parser)]
#[command(name = "ginoe-lab", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Campaign,

    /// RNG seed.
    #[arg(long, global = true, env = "GINOE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Monte Carlo sample count (per campaign default if omitted).
    #[arg(long, global = true, env = "GINOE_SAMPLES")]
    pub samples: Option<usize>,

    /// Matrix size N.
    #[arg(long, global = true, env = "GINOE_N")]
    pub n: Option<usize>,

    /// Points per configuration.
    #[arg(long, global = true, env = "GINOE_K")]
    pub k: Option<usize>,

    /// Comma-separated points; several configurations are concatenated and
    /// split every `--k` values.
    #[arg(long, global = true, env = "GINOE_POINTS", value_delimiter = ',', allow_hyphen_values = true)]
    pub points: Option<Vec<f64>>,

    /// Comma-separated times.
    #[arg(long = "t-grid", global = true, env = "GINOE_T_GRID", value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,

    /// Bins per coordinate as `lo:hi:count`, coordinates separated by `;`.
    #[arg(long, global = true, env = "GINOE_BINS", allow_hyphen_values = true)]
    pub bins: Option<String>,

    /// Output directory for the result table and run manifest. Without it the
    /// table goes to stdout.
    #[arg(long, global = true, env = "GINOE_OUT")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, env = "GINOE_FORMAT", value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Campaign {
    /// Pf² = det and elimination vs matchings on random skew matrices.
    PfaffianSelftest,
    /// Tail function, correlation functions and spin moments on a grid of spacings.
    KernelTable,
    /// Monte Carlo spin product moment against the closed form.
    McSpins,
    /// Binned modified density against the limiting kernel.
    McDensity,
    /// Modified density versus the characteristic-polynomial expression.
    Lemma1,
    /// I_t over U(K) against its exact Pfaffian shape.
    MatrixIntegral,
    /// Critical data per matching and the exact stationary-phase sum.
    StationaryPhase,
    /// Heat-equation residuals and initial-condition pairings.
    HeatCheck,
}

impl Campaign {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PfaffianSelftest => "pfaffian-selftest",
            Self::KernelTable => "kernel-table",
            Self::McSpins => "mc-spins",
            Self::McDensity => "mc-density",
            Self::Lemma1 => "lemma1",
            Self::MatrixIntegral => "matrix-integral",
            Self::StationaryPhase => "stationary-phase",
            Self::HeatCheck => "heat-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// Fully resolved configuration, echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub subcommand: Campaign,
    pub seed: u64,
    pub samples: usize,
    pub n: usize,
    pub k: usize,
    pub points: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub bins: Vec<BinSpec>,
    pub out_path: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    /// Points split into configurations of `k` values each.
    pub fn configurations(&self) -> Vec<Vec<f64>> {
        self.points.chunks(self.k).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl BinSpec {
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.count).map(|i| self.lo + (self.hi - self.lo) * i as f64 / self.count as f64).collect()
    }
}

pub fn parse_bins(s: &str) -> Result<Vec<BinSpec>, String> {
    s.split(';')
        .filter(|c| !c.trim().is_empty())
        .map(|c| {
            let parts: Vec<&str> = c.split(':').map(str::trim).collect();
            let [lo, hi, count] = parts.as_slice() else {
                return Err(format!("bin spec `{c}` is not lo:hi:count"));
            };
            let lo: f64 = lo.parse().map_err(|_| format!("bad lower edge `{lo}`"))?;
            let hi: f64 = hi.parse().map_err(|_| format!("bad upper edge `{hi}`"))?;
            let count: usize = count.parse().map_err(|_| format!("bad bin count `{count}`"))?;
            if lo.is_nan() || hi.is_nan() || lo >= hi || count == 0 {
                return Err(format!("bin spec `{c}` needs lo < hi and count ≥ 1"));
            }
            Ok(BinSpec { lo, hi, count })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_parse() {
        let b = parse_bins("-0.6:-0.2:2; 0.2:0.6:4").unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].edges(), vec![-0.6, -0.4, -0.2]);
        assert_eq!(b[1].count, 4);
        assert!(parse_bins("0:1").is_err());
        assert!(parse_bins("1:0:3").is_err());
    }
}
