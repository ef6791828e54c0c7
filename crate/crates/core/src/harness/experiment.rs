use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hierarchy::{build_hierarchy, Hierarchy};
use crate::oracle::{BanditLog, RegressorBank, DEFAULT_L2_PENALTY};
use crate::policy::{Mode, Policy, PolicyConfig};
use crate::rng::{stream, Rng};
use crate::sampling::StrategyConfig;

use super::dataset::MultiLabelDataset;
use super::feedback::{indicator_reward, observation_mask};
use super::stats::ProgressiveStats;
use super::synthetic::RealizableEnv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Flat,
    Extreme,
}

impl ModeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeKind::Flat => "flat",
            ModeKind::Extreme => "extreme",
        }
    }
}

impl std::str::FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(ModeKind::Flat),
            "extreme" => Ok(ModeKind::Extreme),
            _ => Err(Error::InvalidConfig(format!(
                "unknown mode `{s}` (expected flat or extreme)"
            ))),
        }
    }
}

impl std::fmt::Display for ModeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategy: StrategyConfig,
    pub mode: ModeKind,
    pub beam: usize,
    pub max_leaf: usize,
    /// Rows held out for hierarchy training; unused in flat mode.
    pub init_size: usize,
    /// Probability that a played slot reveals its reward.
    pub feedback_prob: f64,
    pub seed: u64,
    pub horizon: u64,
    /// Resample the stream with replacement to length `horizon`. Without it the stream is the
    /// shuffled remainder, truncated to `horizon`.
    pub bootstrap: bool,
    pub l2_penalty: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            strategy: StrategyConfig::default(),
            mode: ModeKind::Flat,
            beam: 10,
            max_leaf: 100,
            init_size: 0,
            feedback_prob: 1.0,
            seed: 0,
            horizon: 1000,
            bootstrap: true,
            l2_penalty: DEFAULT_L2_PENALTY,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        self.strategy.validate()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.feedback_prob > 0.0 && self.feedback_prob <= 1.0) {
            return bad(format!("feedback probability {} outside (0, 1]", self.feedback_prob));
        }
        if self.init_size >= dataset_len {
            return bad(format!(
                "init size {} leaves no rows out of {dataset_len}",
                self.init_size
            ));
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if self.beam == 0 || self.max_leaf == 0 {
            return bad("beam and max leaf size must be positive".into());
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty > 0.0) {
            return bad(format!("l2 penalty {} must be positive", self.l2_penalty));
        }
        Ok(())
    }
}

/// Outcome of one seeded replay.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub stats: ProgressiveStats,
    pub log: BanditLog,
    /// Regressors in force at the end of the run.
    pub bank: RegressorBank,
    pub refits: usize,
}

/// Seeded split of `0..n` into init rows and the replay stream.
pub fn split_and_order(n: usize, config: &ExperimentConfig) -> (Vec<usize>, Vec<usize>) {
    let root = Rng::new(config.seed);
    let mut perm: Vec<usize> = (0..n).collect();
    root.stream(&[stream::SPLIT]).shuffle(&mut perm);
    let mut rest = perm.split_off(config.init_size);
    let init = perm;
    root.stream(&[stream::SHUFFLE]).shuffle(&mut rest);
    let order = if config.bootstrap {
        let mut rng = root.stream(&[stream::BOOTSTRAP]);
        (0..config.horizon).map(|_| rest[rng.below(rest.len())]).collect()
    } else {
        rest.truncate(config.horizon as usize);
        rest
    };
    (init, order)
}

/// Replays `dataset` as a bandit stream. Rewards come from the label indicators, or from `env`
/// when given (which also enables regret tracking). In extreme mode the hierarchy is built from
/// the init rows unless one is supplied.
pub fn run_experiment(
    config: &ExperimentConfig,
    dataset: &MultiLabelDataset,
    hierarchy: Option<Arc<Hierarchy>>,
    env: Option<&RealizableEnv>,
) -> Result<RunResult> {
    config.validate(dataset.len())?;
    if let Some(env) = env {
        if env.num_arms() != dataset.num_labels() || env.dim() != dataset.dim() {
            return Err(Error::InvalidConfig(
                "synthetic environment does not match the dataset".into(),
            ));
        }
    }
    let (init, order) = split_and_order(dataset.len(), config);
    let horizon = order.len() as u64;
    let root = Rng::new(config.seed);

    let mode = match config.mode {
        ModeKind::Flat => Mode::Flat,
        ModeKind::Extreme => {
            let hierarchy = match hierarchy {
                Some(h) => h,
                None => {
                    if init.is_empty() {
                        return Err(Error::InvalidConfig(
                            "extreme mode needs init rows or a prebuilt hierarchy".into(),
                        ));
                    }
                    let part = dataset.subset(&init);
                    let mut rng = root.stream(&[stream::TREE]);
                    Arc::new(build_hierarchy(
                        part.rows(),
                        part.labels(),
                        dataset.num_labels(),
                        dataset.dim(),
                        config.max_leaf,
                        config.l2_penalty,
                        &mut rng,
                    )?)
                }
            };
            Mode::Extreme {
                hierarchy,
                beam: config.beam,
            }
        }
    };

    let mut pcfg = PolicyConfig::new(config.strategy, dataset.num_labels(), dataset.dim(), horizon);
    pcfg.l2_penalty = config.l2_penalty;
    let mut policy = Policy::new(pcfg, mode, config.seed)?;

    let mut feedback_rng = root.stream(&[stream::FEEDBACK]);
    let mut noise_rng = root.stream(&[stream::NOISE]);
    let mut step_rewards = Vec::with_capacity(order.len());
    let mut step_regrets = env.map(|_| Vec::with_capacity(order.len()));
    let (mut played, mut seen) = (0u64, 0u64);
    let mut observed = Vec::with_capacity(config.strategy.k);

    for (i, &row) in order.iter().enumerate() {
        let t = i as u64 + 1;
        policy.maybe_refit(t)?;
        let x = dataset.row(row);
        let sel = policy.step(t, x)?;
        let rewards: Vec<f64> = match env {
            Some(env) => sel
                .arms
                .iter()
                .map(|&a| env.sample_reward(x, a, &mut noise_rng))
                .collect(),
            None => sel
                .arms
                .iter()
                .map(|&a| indicator_reward(dataset.positives(row), a))
                .collect(),
        };
        let mask = observation_mask(sel.arms.len(), config.feedback_prob, &mut feedback_rng);
        observed.clear();
        observed.extend(
            rewards
                .iter()
                .zip(&mask)
                .enumerate()
                .filter(|(_, (_, &m))| m)
                .map(|(slot, (&r, _))| (slot, r)),
        );
        policy.record_feedback(x, &sel, &observed)?;
        played += sel.arms.len() as u64;
        seen += observed.len() as u64;
        step_rewards.push(rewards.iter().sum());
        if let (Some(env), Some(g)) = (env, step_regrets.as_mut()) {
            g.push(env.regret(x, &sel.arms));
        }
    }

    let mut stats = ProgressiveStats::from_steps(step_rewards, step_regrets);
    stats.played_slots = played;
    stats.observed_slots = seen;
    let refits = policy.refits();
    Ok(RunResult {
        seed: config.seed,
        config: config.clone(),
        stats,
        log: policy.log().clone(),
        bank: policy.bank().clone(),
        refits,
    })
}

/// Runs one replay per seed on up to `jobs` threads (0 picks the rayon default). Results come
/// back in seed order.
pub fn run_seeds(
    config: &ExperimentConfig,
    dataset: &MultiLabelDataset,
    hierarchy: Option<Arc<Hierarchy>>,
    env: Option<&RealizableEnv>,
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<RunResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let cfg = ExperimentConfig {
                    seed,
                    ..config.clone()
                };
                run_experiment(&cfg, dataset, hierarchy.clone(), env)
            })
            .collect()
    })
}

pub const CSV_HEADER: &str =
    "t,progressive_mean,cumulative_reward,cumulative_regret,seed,strategy,mode,b,k,r";

/// Writes the checkpoint rows of every run under a single header. `b` is empty in flat mode.
pub fn write_csv(runs: &[RunResult], mut out: impl Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for run in runs {
        let c = &run.config;
        let b = match c.mode {
            ModeKind::Flat => String::new(),
            ModeKind::Extreme => c.beam.to_string(),
        };
        for cp in &run.stats.checkpoints {
            let regret = cp
                .cumulative_regret
                .map_or_else(String::new, |g| g.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                cp.t,
                cp.progressive_mean,
                cp.cumulative_reward,
                regret,
                run.seed,
                c.strategy.kind,
                c.mode,
                b,
                c.strategy.k,
                c.strategy.explore_slots()
            )?;
        }
    }
    Ok(())
}
