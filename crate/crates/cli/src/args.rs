use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Top-k contextual bandits over very large arm sets.
#[derive(Debug, Parser)]
#[command(name = "xtopk", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the label tree and routing scorers from the init split of a dataset.
    BuildTree(BuildTreeArgs),
    /// Replay a dataset as a bandit stream and write progressive statistics.
    Run(RunArgs),
    /// Time selection steps across beam widths.
    Bench(BenchArgs),
    /// Fit a realizable environment to a dataset and run all four strategies against it.
    Synth(SynthArgs),
    /// Write a planted synthetic multi-label dataset.
    Gen(GenArgs),
}

/// Experiment settings shared by `run` and `synth`. Unset flags fall back to the config file,
/// then to the built-in defaults shown.
#[derive(Debug, Args, Default, Clone)]
pub struct ExperimentFlags {
    /// TOML file with any of the settings below (snake_case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exploration strategy: igw, boltzmann, epsilon-greedy or greedy [default: igw]
    #[arg(long)]
    pub strategy: Option<String>,
    /// IGW schedule: practical, theoretical-realizable or theoretical-misspecified
    /// [default: practical]
    #[arg(long)]
    pub gamma_schedule: Option<String>,
    /// Constant C of the practical schedule sqrt(C N A') [default: 1.0]
    #[arg(long)]
    pub gamma_c: Option<f64>,
    /// Boltzmann inverse-temperature scale [default: 1.0]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Epsilon-greedy exploration rate [default: 0.167]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Slots per round [default: 5]
    #[arg(short = 'k', long)]
    pub k: Option<usize>,
    /// Explore slots per round [default: 3]
    #[arg(short = 'r', long)]
    pub r: Option<usize>,
    /// flat or extreme [default: flat]
    #[arg(long)]
    pub mode: Option<String>,
    /// Beam size [default: 10]
    #[arg(short = 'b', long)]
    pub beam: Option<usize>,
    /// Maximum arms per leaf when a tree is built [default: 100]
    #[arg(short = 'm', long)]
    pub max_leaf: Option<usize>,
    /// Rows held out for tree training [default: 0]
    #[arg(long)]
    pub init_size: Option<usize>,
    /// Probability that a played slot reveals its reward [default: 1.0]
    #[arg(short = 'c', long)]
    pub feedback_prob: Option<f64>,
    /// First seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds to run [default: 1]
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Rounds per run [default: 1000]
    #[arg(short = 'T', long)]
    pub horizon: Option<u64>,
    /// Replay the shuffled remainder once (truncated to the horizon) instead of resampling it
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Ridge penalty of the regressors [default: 1.0]
    #[arg(long)]
    pub l2: Option<f64>,
    /// Worker threads for parallel seeds, 0 for all cores [default: 0]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildTreeArgs {
    /// Dataset in XMC text format (relative paths resolve against $XTOPK_DATA_DIR when set)
    #[arg(long)]
    pub data: PathBuf,
    /// Output model file
    #[arg(long)]
    pub out: PathBuf,
    /// Rows used for training the tree
    #[arg(long)]
    pub init_size: usize,
    /// Maximum arms per leaf
    #[arg(short = 'm', long, default_value_t = 100)]
    pub max_leaf: usize,
    /// Seed of the init split and the clustering
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ridge penalty of the routing scorers
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset in XMC text format (relative paths resolve against $XTOPK_DATA_DIR when set)
    #[arg(long)]
    pub data: PathBuf,
    /// Model file from `build-tree`; required in extreme mode
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Also save the final regressors of the first seed
    #[arg(long)]
    pub save_bank: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Dataset whose rows serve as contexts and whose labels the means are fitted to
    #[arg(long)]
    pub data: PathBuf,
    /// Model file from `build-tree`; without one, extreme mode builds a tree from the init rows
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output prefix; one `<prefix>.<strategy>.csv` is written per strategy
    #[arg(long)]
    pub out_prefix: PathBuf,
    /// Standard deviation of the Gaussian reward noise
    #[arg(long, default_value_t = 0.1)]
    pub noise_sd: f64,
    #[command(flatten)]
    pub experiment: ExperimentFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Model file from `build-tree`
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Regressor file from `run --save-bank`; random sparse regressors otherwise
    #[arg(long)]
    pub bank: Option<PathBuf>,
    /// Dataset supplying the contexts; random sparse contexts otherwise
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Generate a balanced synthetic model with this many arms instead of loading one
    #[arg(long)]
    pub synthetic_arms: Option<usize>,
    /// Maximum leaf size of the synthetic model
    #[arg(short = 'm', long, default_value_t = 100)]
    pub max_leaf: usize,
    /// Feature dimension of the synthetic model
    #[arg(long, default_value_t = 100_000)]
    pub dim: usize,
    /// Nonzeros per random context
    #[arg(long, default_value_t = 100)]
    pub context_nnz: usize,
    /// Nonzeros per synthetic routing scorer
    #[arg(long, default_value_t = 100)]
    pub routing_nnz: usize,
    /// Nonzeros per random regressor
    #[arg(long, default_value_t = 20)]
    pub regressor_nnz: usize,
    /// Beam widths, comma separated; `all` scores every arm
    #[arg(long, value_delimiter = ',', default_value = "10,all")]
    pub beams: Vec<String>,
    /// Number of timed contexts
    #[arg(long, default_value_t = 1000)]
    pub contexts: usize,
    /// Slots per round
    #[arg(short = 'k', long, default_value_t = 5)]
    pub k: usize,
    /// Explore slots per round
    #[arg(short = 'r', long, default_value_t = 3)]
    pub r: usize,
    /// Seed for generated models and contexts
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of rows
    #[arg(long)]
    pub n: usize,
    /// Feature dimension
    #[arg(long)]
    pub dim: usize,
    /// Number of labels
    #[arg(long)]
    pub labels: usize,
    /// Positive labels per row
    #[arg(long, default_value_t = 5)]
    pub labels_per_row: usize,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output dataset file
    #[arg(long)]
    pub out: PathBuf,
}
