//! Replaying multi-label data as bandit feedback, the realizable synthetic environment, run
//! statistics and inference timing.

pub mod bench;
pub mod dataset;
pub mod experiment;
pub mod feedback;
pub mod stats;
pub mod synthetic;

pub use bench::{bench_inference, random_bank, random_contexts, synthetic_model, write_bench_csv, BenchRow, ALL_ARMS};
pub use dataset::{synthetic_multilabel, MultiLabelDataset};
pub use experiment::{run_experiment, run_seeds, write_csv, ExperimentConfig, ModeKind, RunResult};
pub use feedback::simulate_round;
pub use stats::{compare, MeanSe, Outcome, ProgressiveStats};
pub use synthetic::RealizableEnv;
