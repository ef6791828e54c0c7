use std::path::{Path, PathBuf};

use serde::Deserialize;
use xtopk::harness::{ExperimentConfig, ModeKind};
use xtopk::{GammaSchedule, StrategyConfig, StrategyKind};

use crate::args::ExperimentFlags;
use crate::CliError;

/// Environment variable naming the directory relative dataset paths resolve against.
pub const DATA_DIR_VAR: &str = "XTOPK_DATA_DIR";

pub fn resolve_data_path(path: &Path) -> PathBuf {
    match std::env::var_os(DATA_DIR_VAR) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Settings a TOML config file may carry.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub strategy: Option<String>,
    pub gamma_schedule: Option<String>,
    pub gamma_c: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub k: Option<usize>,
    pub r: Option<usize>,
    pub mode: Option<String>,
    pub beam: Option<usize>,
    pub max_leaf: Option<usize>,
    pub init_size: Option<usize>,
    pub feedback_prob: Option<f64>,
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub horizon: Option<u64>,
    pub bootstrap: Option<bool>,
    pub l2: Option<f64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub jobs: usize,
}

fn parse<T: std::str::FromStr<Err = xtopk::Error>>(s: &str) -> Result<T, CliError> {
    s.parse().map_err(|e: xtopk::Error| CliError::Usage(e.to_string()))
}

/// Merges flags over the config file over the defaults.
pub fn resolve(flags: &ExperimentFlags) -> Result<Resolved, CliError> {
    let file = match &flags.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let defaults = ExperimentConfig::default();
    let d = StrategyConfig::default();

    let kind: StrategyKind = match flags.strategy.as_ref().or(file.strategy.as_ref()) {
        Some(s) => parse(s)?,
        None => d.kind,
    };
    let gamma_schedule: GammaSchedule =
        match flags.gamma_schedule.as_ref().or(file.gamma_schedule.as_ref()) {
            Some(s) => parse(s)?,
            None => d.gamma_schedule,
        };
    let mode: ModeKind = match flags.mode.as_ref().or(file.mode.as_ref()) {
        Some(s) => parse(s)?,
        None => defaults.mode,
    };
    let strategy = StrategyConfig {
        kind,
        gamma_schedule,
        gamma_c: flags.gamma_c.or(file.gamma_c).unwrap_or(d.gamma_c),
        beta: flags.beta.or(file.beta).unwrap_or(d.beta),
        epsilon: flags.epsilon.or(file.epsilon).unwrap_or(d.epsilon),
        k: flags.k.or(file.k).unwrap_or(d.k),
        r: flags.r.or(file.r).unwrap_or(d.r),
    };
    let bootstrap = if flags.no_bootstrap {
        false
    } else {
        file.bootstrap.unwrap_or(defaults.bootstrap)
    };
    let experiment = ExperimentConfig {
        strategy,
        mode,
        beam: flags.beam.or(file.beam).unwrap_or(defaults.beam),
        max_leaf: flags.max_leaf.or(file.max_leaf).unwrap_or(defaults.max_leaf),
        init_size: flags.init_size.or(file.init_size).unwrap_or(defaults.init_size),
        feedback_prob: flags
            .feedback_prob
            .or(file.feedback_prob)
            .unwrap_or(defaults.feedback_prob),
        seed: flags.seed.or(file.seed).unwrap_or(defaults.seed),
        horizon: flags.horizon.or(file.horizon).unwrap_or(defaults.horizon),
        bootstrap,
        l2_penalty: flags.l2.or(file.l2).unwrap_or(defaults.l2_penalty),
    };
    strategy
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let count = flags.seeds.or(file.seeds).unwrap_or(1);
    if count == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let seeds = (0..count).map(|i| experiment.seed.wrapping_add(i)).collect();
    Ok(Resolved {
        experiment,
        seeds,
        jobs: flags.jobs.or(file.jobs).unwrap_or(0),
    })
}
