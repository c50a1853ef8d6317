use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use regretlab_core::{StrategyKind, DEFAULT_ENUMERATION_CAP};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "regretlab",
    version,
    about = "Exact and simulated regret of product-selection rules"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by every subcommand. `out` and `threads` do not affect
/// results and are left out of the recorded config.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Common {
    /// Seed for every random stream
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (stdout if omitted)
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Largest observation space that may be enumerated
    #[arg(long, global = true, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
    /// Worker threads
    #[arg(long, global = true, env = "REGRETLAB_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Thompson Sampling stand-in for zero rating counts
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub pseudo_count: f64,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Worst-case regret curve over two-product, two-rating states
    WorstCase(WorstCaseArgs),
    /// Exact expected regret of a strategy in a given state
    ExactRegret(ExactRegretArgs),
    /// Observations per product needed by greedy for a target miss probability
    MinM(MinMArgs),
    /// Monte Carlo regret tables over a review dataset
    Simulate(SimulateArgs),
    /// Thompson Sampling regret next to greedy for two products, two ratings
    TsRegret(TsRegretArgs),
    /// Re-run the config recorded in an output file and compare
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct WorstCaseArgs {
    #[arg(long, default_value = "greedy")]
    pub strategy: StrategyKind,
    #[arg(long, default_value_t = 20)]
    pub m_max: u32,
    #[arg(long, default_value_t = 2)]
    pub n_products: usize,
    #[arg(long, default_value_t = 2)]
    pub n_ratings: usize,
    /// Spacing of the coarse grid over (p1, p2)
    #[arg(long, default_value_t = 1.0 / 200.0)]
    pub grid_step: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExactRegretArgs {
    /// JSON state file: columns of rating probabilities, one per product
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value = "greedy")]
    pub strategy: StrategyKind,
    #[arg(long)]
    pub m: u32,
    /// Include every observation matrix's contribution
    #[arg(long)]
    pub detail: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MinMArgs {
    #[arg(long)]
    pub n_products: usize,
    #[arg(long)]
    pub n_ratings: usize,
    #[arg(long)]
    pub gap: f64,
    #[arg(long)]
    pub delta: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Review CSV (`product_id,rating`, optionally gzipped)
    #[arg(
        long,
        conflicts_with = "synthetic",
        required_unless_present = "synthetic"
    )]
    pub dataset: Option<PathBuf>,
    /// JSON state file to draw a synthetic dataset from
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
    /// Reviews per product in a synthetic dataset
    #[arg(long, default_value_t = 1000)]
    pub reviews: usize,
    /// Rating scale of the dataset
    #[arg(long, default_value_t = 5)]
    pub n_ratings: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
    pub n_products: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(
        long = "strategy",
        value_delimiter = ',',
        default_value = "uniform,greedy,ucb,ts"
    )]
    pub strategies: Vec<StrategyKind>,
    /// Also write every trial's regret (JSON lines) to this file
    #[arg(long)]
    #[serde(skip)]
    pub trial_log: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TsRegretArgs {
    #[arg(long)]
    pub p1: f64,
    #[arg(long)]
    pub p2: f64,
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub detail: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// An output file written by another subcommand
    pub file: PathBuf,
}
