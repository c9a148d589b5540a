//! Command-line surface. The same structs are stored in run manifests, so
//! every field here is also part of the replay format.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fiid::coupling::MomentEstimator;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Parser, Debug, Clone)]
#[command(name = "fiid", version, about = "Factor-of-i.i.d. independent set experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Common {
    /// Global seed; trial `t` draws from the stream `derive(seed, TRIAL, t)`.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Number of Monte Carlo trials (outer trials for coupling commands).
    #[arg(long, global = true, default_value_t = 10_000)]
    pub trials: u64,
    /// Worker threads; 0 uses every available core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Output format; `bounds` defaults to json, everything else to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file. Without it the table goes to stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json` when `--out` is set.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Density of a factor on a tree or a finite graph.
    Density(DensityArgs),
    /// Coupled intersection densities over a grid of p.
    ScanP(ScanArgs),
    /// Conditional stability moments, or the p solving a moment equation.
    Stability(StabilityArgs),
    /// First-moment and entropy report for a density profile.
    Bounds(BoundsArgs),
    /// Exhaustive check of the configuration-model first moment.
    OracleCheck(OracleArgs),
    /// Density of the transferred set on Poisson Galton-Watson trees.
    PgwTransfer(TransferArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::ScanP(_) => "scan-p",
            Command::Stability(_) => "stability",
            Command::Bounds(_) => "bounds",
            Command::OracleCheck(_) => "oracle-check",
            Command::PgwTransfer(_) => "pgw-transfer",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityArgs {
    /// `lw:P:K`, `greedy`, `zero` or a JSON factor spec.
    #[arg(long)]
    pub factor: String,
    /// `regular-tree:D`, `pgw:LAMBDA`, `config:N:D` or `er:N:LAMBDA`.
    #[arg(long)]
    pub host: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Plugin,
    #[default]
    Jackknife,
    Unbiased,
}

impl From<EstimatorArg> for MomentEstimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Plugin => MomentEstimator::Plugin,
            EstimatorArg::Jackknife => MomentEstimator::Jackknife,
            EstimatorArg::Unbiased => MomentEstimator::Unbiased,
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub factor: String,
    /// `regular-tree:D`, `config:N:D` or `er:N:LAMBDA`.
    #[arg(long)]
    pub host: String,
    /// Copies; at least three are simulated for the binomial statistics.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Comma-separated values of p in [0,1].
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    /// Also estimate `E*[Q^m]` for `m = 0..k-1`.
    #[arg(long)]
    pub stability: bool,
    #[arg(long, default_value_t = 400)]
    pub inner_trials: u64,
    #[arg(long, value_enum, default_value_t)]
    pub estimator: EstimatorArg,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityArgs {
    #[arg(long)]
    pub factor: String,
    #[arg(long)]
    pub host: String,
    /// Resampling density; ignored when `--target` is given.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Moment orders; defaults to 0, 1, 2.
    #[arg(long, value_delimiter = ',')]
    pub moments: Vec<f64>,
    #[arg(long, default_value_t = 400)]
    pub inner_trials: u64,
    #[arg(long, value_enum, default_value_t)]
    pub estimator: EstimatorArg,
    /// Solve `E*[Q^u](p) = target` for p instead.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub u: f64,
    /// Coarse grid size for the root search.
    #[arg(long, default_value_t = 9)]
    pub coarse: usize,
    #[arg(long, default_value_t = 12)]
    pub bisections: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// Full profile `rho(T)` for bitmasks `T = 0..2^k`, comma-separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "alpha", required_unless_present = "alpha")]
    pub rho: Vec<f64>,
    /// Symmetric profile `rho(T) = alpha_|T|`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Scale `alpha` by `log(d)/d` before building the profile.
    #[arg(long, requires = "alpha")]
    pub scaled: bool,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Integer directed edge counts `nd M(T,T')`, row-major, for `ln E[Z(rho, M)]`.
    #[arg(long, value_delimiter = ',', requires_all = ["n", "d"])]
    pub edge_counts: Vec<u64>,
    /// Append an exhaustive oracle comparison on tiny instances.
    #[arg(long)]
    pub self_test: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// 1 or 2.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferArgs {
    #[arg(long)]
    pub factor: String,
    /// Comma-separated offspring means.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    /// Degree caps, one per lambda or a single shared value.
    #[arg(long, value_delimiter = ',', conflicts_with = "schedule_u", required_unless_present = "schedule_u")]
    pub d: Vec<usize>,
    /// Use `d = ceil(lambda + lambda^u)` with `1/2 < u < 1`.
    #[arg(long)]
    pub schedule_u: Option<f64>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    /// Compare the regenerated output with the recorded file instead of
    /// overwriting it; a mismatch exits with status 3.
    #[arg(long)]
    pub check: bool,
}
