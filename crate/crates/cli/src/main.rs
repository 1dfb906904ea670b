mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ncdges::experiments::MeasureKind;
use ncdges::ncd::Preset;
use ncdges::synth::Model;

/// Causal discovery with a greedy equivalence search guided by
/// conditional dependence measures.
#[derive(Debug, Parser)]
#[command(name = "ncdges", version)]
pub struct Cli {
    /// TOML run document; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a random DAG and a dataset from it.
    Simulate(SimulateArgs),
    /// Estimate a CPDAG from a dataset.
    Discover(DiscoverArgs),
    /// Compare an estimated graph with the truth.
    Evaluate(EvaluateArgs),
    /// Run simulate, discover and evaluate over a grid of cells and seeds.
    Bench(BenchArgs),
    /// Check that the search recovers the true CPDAG with a d-separation oracle.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: Option<Model>,
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Expected number of neighbors per node.
    #[arg(long)]
    pub degree: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// True DAG as a JSON graph document.
    #[arg(long)]
    pub graph_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub measure: Option<MeasureKind>,
    /// NCD network sizes and threshold for a data regime.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// NCD only.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Largest auxiliary set an operator may carry.
    #[arg(long)]
    pub max_aux: Option<usize>,
    /// True DAG, required by the oracle measure.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Estimated CPDAG.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Search trace as JSON.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum PresetArg {
    Sparse,
    Dense,
    MultiDim,
    GeneNetwork,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Sparse => Preset::Sparse,
            PresetArg::Dense => Preset::Dense,
            PresetArg::MultiDim => Preset::MultiDim,
            PresetArg::GeneNetwork => Preset::GeneNetwork,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    /// True graph: a DAG or a CPDAG.
    #[arg(long)]
    pub truth: PathBuf,
    /// Report as JSON; printed to stdout either way.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: Option<Model>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub degree: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub measure: Option<MeasureKind>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Receives per-seed reports, summary.json and timing.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    /// Enumerate every DAG up to this many nodes (at most 5).
    #[arg(long)]
    pub max_exhaustive: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Nodes in each random DAG (at most 8).
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub degree: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
