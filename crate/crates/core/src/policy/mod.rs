//! The epoch-based bandit loop in flat and tree-reduced form.
//!
//! At every epoch boundary the regressors are refit on the full feedback log and used unchanged
//! for the rest of the epoch. Each step scores the candidate arms (all arms in flat mode, the
//! beam-search decomposition in reduced mode), fills `k - r` slots greedily and `r` slots by
//! sequential exploration draws, then maps chosen tree nodes to uniformly drawn arms below them.

pub mod epoch;
pub mod gamma;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hierarchy::{beam_search, resolve_singleton, ArmId, EffectiveArm, Hierarchy};
use crate::oracle::{fit, BanditLog, RegressorBank, DEFAULT_L2_PENALTY, DEFAULT_PREDICTION};
use crate::rng::{stream, Rng};
use crate::sampling::{select_topk, Gamma, GammaSchedule, StrategyConfig};
use crate::sparse::SparseVector;

pub use gamma::{
    gamma_practical, gamma_theoretical_misspecified, gamma_theoretical_realizable, GammaParams,
};

#[derive(Debug, Clone)]
pub enum Mode {
    Flat,
    Extreme {
        hierarchy: Arc<Hierarchy>,
        beam: usize,
    },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Flat => "flat",
            Mode::Extreme { .. } => "extreme",
        }
    }

    pub fn beam(&self) -> Option<usize> {
        match self {
            Mode::Flat => None,
            Mode::Extreme { beam, .. } => Some(*beam),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicyConfig {
    pub strategy: StrategyConfig,
    pub gamma: GammaParams,
    pub l2_penalty: f64,
    pub num_arms: usize,
    pub dim: usize,
}

impl PolicyConfig {
    pub fn new(strategy: StrategyConfig, num_arms: usize, dim: usize, horizon: u64) -> Self {
        let mut gamma = GammaParams::new(strategy.gamma_schedule, num_arms, strategy.k, dim, horizon);
        gamma.practical_c = strategy.gamma_c;
        PolicyConfig {
            strategy,
            gamma,
            l2_penalty: DEFAULT_L2_PENALTY,
            num_arms,
            dim,
        }
    }
}

/// Candidate effective arms for one context with their clamped predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    pub arms: Vec<EffectiveArm>,
    pub scores: Vec<f64>,
}

/// Arms played in one step, slot by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Physical arms to play.
    pub arms: Vec<ArmId>,
    /// Effective arm behind each slot.
    pub effective: Vec<EffectiveArm>,
    /// Regressor id each slot's reward is attributed to.
    pub logged_ids: Vec<u32>,
    /// Number of candidates the slots were drawn from.
    pub num_candidates: usize,
}

#[derive(Debug, Clone)]
pub struct Policy {
    config: PolicyConfig,
    mode: Mode,
    rng: Rng,
    bank: Arc<RegressorBank>,
    log: BanditLog,
    epoch: u32,
    refits: usize,
}

impl Policy {
    pub fn new(config: PolicyConfig, mode: Mode, seed: u64) -> Result<Self> {
        config.strategy.validate()?;
        if config.num_arms < config.strategy.k {
            return Err(Error::InvalidConfig(format!(
                "{} arms cannot fill k = {} slots",
                config.num_arms, config.strategy.k
            )));
        }
        if let Mode::Extreme { hierarchy, beam } = &mode {
            if *beam == 0 {
                return Err(Error::InvalidConfig("beam size must be positive".into()));
            }
            if hierarchy.tree.num_arms() != config.num_arms || hierarchy.dim() != config.dim {
                return Err(Error::InvalidConfig(format!(
                    "hierarchy covers {} arms in dimension {}, data has {} arms in dimension {}",
                    hierarchy.tree.num_arms(),
                    hierarchy.dim(),
                    config.num_arms,
                    config.dim
                )));
            }
        }
        let num_ids = Self::id_space(&config, &mode);
        let bank = RegressorBank::empty(config.dim, num_ids, DEFAULT_PREDICTION, config.l2_penalty);
        Ok(Policy {
            log: BanditLog::new(config.dim),
            bank: Arc::new(bank),
            rng: Rng::new(seed),
            epoch: 1,
            refits: 0,
            config,
            mode,
        })
    }

    fn id_space(config: &PolicyConfig, mode: &Mode) -> usize {
        match mode {
            Mode::Flat => config.num_arms,
            Mode::Extreme { hierarchy, .. } => config.num_arms + hierarchy.tree.num_nodes(),
        }
    }

    /// True when the beam can yield fewer than `k` effective arms for some context.
    pub fn beam_may_underfill(&self) -> bool {
        match &self.mode {
            Mode::Flat => false,
            Mode::Extreme { hierarchy, beam } => {
                beam * hierarchy.tree.max_leaf() < self.config.strategy.k
            }
        }
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn bank(&self) -> &RegressorBank {
        &self.bank
    }

    /// Replaces the regressors, e.g. to evaluate a fixed model.
    pub fn set_bank(&mut self, bank: RegressorBank) -> Result<()> {
        if bank.dim() != self.config.dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.dim,
                actual: bank.dim(),
            });
        }
        let needed = Self::id_space(&self.config, &self.mode);
        if bank.num_ids() < needed {
            return Err(Error::InvalidArgument(format!(
                "bank holds {} ids, the policy needs {needed}",
                bank.num_ids()
            )));
        }
        self.bank = Arc::new(bank);
        Ok(())
    }

    pub fn log(&self) -> &BanditLog {
        &self.log
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// `N_{l-1}` for the current epoch.
    pub fn n_prev(&self) -> u64 {
        epoch::boundary(self.epoch - 1)
    }

    pub fn refits(&self) -> usize {
        self.refits
    }

    /// Refits the regressors on the whole log when step `t` opens a new epoch.
    pub fn maybe_refit(&mut self, t: u64) -> Result<bool> {
        if !epoch::starts_epoch(t) {
            return Ok(false);
        }
        self.epoch = epoch::epoch_of(t);
        let num_ids = Self::id_space(&self.config, &self.mode);
        self.bank = Arc::new(fit(&self.log, num_ids, self.config.l2_penalty)?);
        self.refits += 1;
        Ok(true)
    }

    /// Scores every candidate for `x` under the current regressors.
    pub fn candidates(&self, x: &SparseVector) -> Result<Candidates> {
        if x.dim() != self.config.dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.dim,
                actual: x.dim(),
            });
        }
        let num_arms = self.config.num_arms;
        let arms: Vec<EffectiveArm> = match &self.mode {
            Mode::Flat => (0..num_arms as ArmId).map(EffectiveArm::Arm).collect(),
            Mode::Extreme { hierarchy, beam } => {
                beam_search(&hierarchy.tree, &hierarchy.routing, x, *beam)?
                    .entries()
                    .to_vec()
            }
        };
        let scores = arms
            .iter()
            .map(|e| self.bank.predict_unchecked(x, e.bank_id(num_arms)))
            .collect();
        Ok(Candidates { arms, scores })
    }

    /// Scaling rule for a step with `num_candidates` candidates.
    pub fn gamma(&self, num_candidates: usize) -> Result<Gamma> {
        let n_prev = self.n_prev();
        let mut params = self.config.gamma.with_candidates(num_candidates);
        params.k = params.k.min(num_candidates);
        Ok(match self.config.strategy.gamma_schedule {
            GammaSchedule::Practical => Gamma::Practical {
                c: self.config.strategy.gamma_c,
                n_prev,
            },
            GammaSchedule::TheoreticalRealizable => {
                Gamma::Fixed(gamma_theoretical_realizable(&params, n_prev)?)
            }
            GammaSchedule::TheoreticalMisspecified => {
                Gamma::Fixed(gamma_theoretical_misspecified(&params, n_prev)?)
            }
        })
    }

    /// Chooses the slate for step `t`. Slot draws use the child streams `[SELECT, t, slot]` and
    /// node substitutions use `[RESOLVE, t, slot]`.
    pub fn step(&self, t: u64, x: &SparseVector) -> Result<Selection> {
        let cands = self.candidates(x)?;
        self.select(t, &cands)
    }

    /// Slot selection over precomputed candidates.
    pub fn select(&self, t: u64, cands: &Candidates) -> Result<Selection> {
        let k = self.config.strategy.k;
        let z = cands.arms.len();
        let step_rng = self.rng.stream(&[stream::SELECT, t]);
        let mut strategy = self.config.strategy;
        if z < k {
            strategy.k = z;
            strategy.r = strategy.r.min(z);
        }
        let picks = if z == 0 {
            Vec::new()
        } else {
            let gamma = self.gamma(z)?;
            select_topk(&cands.scores, &strategy, gamma, self.n_prev(), &step_rng)?
        };
        let num_arms = self.config.num_arms;
        let mut sel = Selection {
            arms: Vec::with_capacity(k),
            effective: Vec::with_capacity(k),
            logged_ids: Vec::with_capacity(k),
            num_candidates: z,
        };
        for (slot, &p) in picks.iter().enumerate() {
            let eff = cands.arms[p];
            let arm = match eff {
                EffectiveArm::Arm(a) => a,
                EffectiveArm::Node(n) => {
                    let Mode::Extreme { hierarchy, .. } = &self.mode else {
                        unreachable!("flat mode has no node candidates")
                    };
                    let mut r = self.rng.stream(&[stream::RESOLVE, t, slot as u64]);
                    resolve_singleton(&hierarchy.tree, n, &mut r)
                }
            };
            sel.arms.push(arm);
            sel.effective.push(eff);
            sel.logged_ids.push(eff.bank_id(num_arms) as u32);
        }
        if z < k {
            self.fill_short_slate(t, cands, &mut sel)?;
        }
        Ok(sel)
    }

    /// Tops up a slate from a beam with fewer than `k` effective arms by drawing further distinct
    /// arms from the largest node candidates. Extra arms are logged against themselves.
    fn fill_short_slate(&self, t: u64, cands: &Candidates, sel: &mut Selection) -> Result<()> {
        let k = self.config.strategy.k;
        let Mode::Extreme { hierarchy, .. } = &self.mode else {
            return Err(Error::InvalidConfig("flat mode cannot underfill".into()));
        };
        let tree = &hierarchy.tree;
        let mut nodes: Vec<_> = cands
            .arms
            .iter()
            .filter_map(|e| match *e {
                EffectiveArm::Node(n) => Some(n),
                EffectiveArm::Arm(_) => None,
            })
            .collect();
        nodes.sort_by_key(|&n| (std::cmp::Reverse(tree.subtree_size(n)), n));
        let mut rng = self.rng.stream(&[stream::RESOLVE, t, u64::MAX]);
        for n in nodes {
            let mut pool = tree.subtree_arms(n).to_vec();
            rng.shuffle(&mut pool);
            for a in pool {
                if sel.arms.len() == k {
                    return Ok(());
                }
                if !sel.arms.contains(&a) {
                    sel.arms.push(a);
                    sel.effective.push(EffectiveArm::Arm(a));
                    sel.logged_ids.push(a);
                }
            }
        }
        if sel.arms.len() < k {
            return Err(Error::InvalidConfig(format!(
                "could only fill {} of {k} slots",
                sel.arms.len()
            )));
        }
        Ok(())
    }

    /// Logs the observed `(slot, reward)` pairs of `sel` against the slot's regressor id.
    pub fn record_feedback(
        &mut self,
        x: &SparseVector,
        sel: &Selection,
        observed: &[(usize, f64)],
    ) -> Result<()> {
        if observed.is_empty() {
            return Ok(());
        }
        for &(slot, reward) in observed {
            if slot >= sel.logged_ids.len() {
                return Err(Error::InvalidArgument(format!("slot {slot} was not played")));
            }
            if !(0.0..=1.0).contains(&reward) {
                return Err(Error::InvalidArgument(format!("reward {reward} outside [0, 1]")));
            }
        }
        let ctx = self.log.add_context(x.clone())?;
        for &(slot, reward) in observed {
            self.log.push(ctx, sel.logged_ids[slot], reward, self.epoch)?;
        }
        Ok(())
    }
}
