//! Exploration distributions and the sequential k-slot selection shared by the flat and the
//! tree-reduced policies.
//!
//! All distributions are built over an explicit support (a list of candidate ids in ascending
//! order) with scores indexed by candidate id. The best candidate is the highest score with the
//! lowest id winning ties.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::policy::gamma::gamma_practical;
use crate::rng::Rng;

/// An explicit probability vector over a set of distinct candidate ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    support: Vec<usize>,
    probs: Vec<f64>,
}

impl SamplingDistribution {
    fn new(support: Vec<usize>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(support.len(), probs.len());
        SamplingDistribution { support, probs }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Probability assigned to candidate `id` (zero when outside the support).
    pub fn prob_of(&self, id: usize) -> f64 {
        self.support
            .iter()
            .position(|&s| s == id)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Inverse-CDF draw over the stored order using a single uniform.
    pub fn sample(&self, rng: &mut Rng) -> usize {
        self.sample_with(rng.uniform())
    }

    pub fn sample_with(&self, u: f64) -> usize {
        let mut cum = 0.0;
        let mut last_positive = self.support[0];
        for (&id, &p) in self.support.iter().zip(&self.probs) {
            if p > 0.0 {
                cum += p;
                last_positive = id;
                if u < cum {
                    return id;
                }
            }
        }
        last_positive
    }
}

fn check_scores(scores: &[f64], support: &[usize]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    for &id in support {
        let s = *scores.get(id).ok_or_else(|| {
            Error::InvalidArgument(format!("candidate {id} has no score"))
        })?;
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("score {s} for candidate {id}")));
        }
    }
    Ok(())
}

/// Position in `support` of the best candidate (highest score, lowest id on ties).
fn best_position(scores: &[f64], support: &[usize]) -> usize {
    let mut best = 0;
    for (pos, &id) in support.iter().enumerate().skip(1) {
        let (s, b) = (scores[id], scores[support[best]]);
        if s > b || (s == b && id < support[best]) {
            best = pos;
        }
    }
    best
}

/// Inverse gap weighting over all candidates `0..scores.len()`.
pub fn igw_distribution(scores: &[f64], gamma: f64) -> Result<SamplingDistribution> {
    let support: Vec<usize> = (0..scores.len()).collect();
    igw_over(scores, &support, gamma)
}

/// Inverse gap weighting restricted to `support`: every non-best candidate gets
/// `1 / (n + gamma * gap)` and the best candidate takes the residual mass.
pub fn igw_over(scores: &[f64], support: &[usize], gamma: f64) -> Result<SamplingDistribution> {
    check_scores(scores, support)?;
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "gamma must be finite and non-negative, got {gamma}"
        )));
    }
    let n = support.len() as f64;
    if gamma == 0.0 {
        return Ok(SamplingDistribution::new(support.to_vec(), vec![1.0 / n; support.len()]));
    }
    let best = best_position(scores, support);
    let top = scores[support[best]];
    let mut probs = Vec::with_capacity(support.len());
    let mut rest = 0.0;
    for (pos, &id) in support.iter().enumerate() {
        if pos == best {
            probs.push(0.0);
        } else {
            let p = 1.0 / (n + gamma * (top - scores[id]));
            rest += p;
            probs.push(p);
        }
    }
    let residual = 1.0 - rest;
    if residual >= 0.0 {
        probs[best] = residual;
    } else {
        // float error only; exact residual is at least 1/n
        probs[best] = 0.0;
        for p in &mut probs {
            *p /= rest;
        }
    }
    Ok(SamplingDistribution::new(support.to_vec(), probs))
}

/// Boltzmann exploration over all candidates.
pub fn boltzmann_distribution(scores: &[f64], beta: f64, n_prev: u64) -> Result<SamplingDistribution> {
    let support: Vec<usize> = (0..scores.len()).collect();
    boltzmann_over(scores, &support, beta, n_prev)
}

/// Softmax with inverse temperature `ln(max(n_prev, 2)) * beta`.
pub fn boltzmann_over(
    scores: &[f64],
    support: &[usize],
    beta: f64,
    n_prev: u64,
) -> Result<SamplingDistribution> {
    check_scores(scores, support)?;
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    let inv_temp = (n_prev.max(2) as f64).ln() * beta;
    let top = scores[support[best_position(scores, support)]];
    let weights: Vec<f64> = support
        .iter()
        .map(|&id| (inv_temp * (scores[id] - top)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let probs = weights.into_iter().map(|w| w / total).collect();
    Ok(SamplingDistribution::new(support.to_vec(), probs))
}

/// Epsilon-greedy over all candidates.
pub fn epsilon_greedy_distribution(scores: &[f64], epsilon: f64) -> Result<SamplingDistribution> {
    let support: Vec<usize> = (0..scores.len()).collect();
    epsilon_greedy_over(scores, &support, epsilon)
}

pub fn epsilon_greedy_over(
    scores: &[f64],
    support: &[usize],
    epsilon: f64,
) -> Result<SamplingDistribution> {
    check_scores(scores, support)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    let share = epsilon / support.len() as f64;
    let mut probs = vec![share; support.len()];
    probs[best_position(scores, support)] += 1.0 - epsilon;
    Ok(SamplingDistribution::new(support.to_vec(), probs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Greedy,
    Igw,
    Boltzmann,
    EpsilonGreedy,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Greedy,
        StrategyKind::Igw,
        StrategyKind::Boltzmann,
        StrategyKind::EpsilonGreedy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Greedy => "greedy",
            StrategyKind::Igw => "igw",
            StrategyKind::Boltzmann => "boltzmann",
            StrategyKind::EpsilonGreedy => "epsilon-greedy",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "greedy" => Ok(StrategyKind::Greedy),
            "igw" => Ok(StrategyKind::Igw),
            "boltzmann" => Ok(StrategyKind::Boltzmann),
            "epsilon-greedy" | "epsilon_greedy" | "egreedy" => Ok(StrategyKind::EpsilonGreedy),
            other => Err(Error::InvalidArgument(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GammaSchedule {
    TheoreticalRealizable,
    TheoreticalMisspecified,
    Practical,
}

impl GammaSchedule {
    pub fn as_str(&self) -> &'static str {
        match self {
            GammaSchedule::TheoreticalRealizable => "theoretical-realizable",
            GammaSchedule::TheoreticalMisspecified => "theoretical-misspecified",
            GammaSchedule::Practical => "practical",
        }
    }
}

impl fmt::Display for GammaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GammaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "theoretical-realizable" | "realizable" => Ok(GammaSchedule::TheoreticalRealizable),
            "theoretical-misspecified" | "misspecified" => {
                Ok(GammaSchedule::TheoreticalMisspecified)
            }
            "practical" => Ok(GammaSchedule::Practical),
            other => Err(Error::InvalidArgument(format!("unknown gamma schedule '{other}'"))),
        }
    }
}

/// Exploration strategy and slate shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub gamma_schedule: GammaSchedule,
    /// Constant of the practical IGW schedule.
    pub gamma_c: f64,
    pub beta: f64,
    pub epsilon: f64,
    /// Slate size.
    pub k: usize,
    /// Explore slots; the first `k - r` slots are greedy.
    pub r: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            kind: StrategyKind::Igw,
            gamma_schedule: GammaSchedule::Practical,
            gamma_c: 1.0,
            beta: 1.0,
            epsilon: 0.167,
            k: 5,
            r: 3,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be positive".into()));
        }
        if self.explore_slots() > self.k {
            return Err(Error::InvalidConfig(format!(
                "r = {} exceeds k = {}",
                self.r, self.k
            )));
        }
        for (name, v) in [("C", self.gamma_c), ("beta", self.beta), ("epsilon", self.epsilon)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.epsilon > 1.0 {
            return Err(Error::InvalidConfig("epsilon must be <= 1".into()));
        }
        Ok(())
    }

    /// Explore slots actually used; greedy always plays `k` greedy slots.
    pub fn explore_slots(&self) -> usize {
        match self.kind {
            StrategyKind::Greedy => 0,
            _ => self.r,
        }
    }

    pub fn label(&self) -> &'static str {
        self.kind.as_str()
    }
}

/// How the IGW scaling factor is obtained for each explore draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    /// A single value for the whole epoch.
    Fixed(f64),
    /// `sqrt(c * n_prev * A')` where `A'` is the remaining-support size at each draw.
    Practical { c: f64, n_prev: u64 },
}

impl Gamma {
    pub fn value(&self, remaining: usize) -> f64 {
        match *self {
            Gamma::Fixed(g) => g,
            Gamma::Practical { c, n_prev } => gamma_practical(n_prev, remaining, c),
        }
    }
}

/// Distribution for one explore draw over the remaining support.
pub fn slot_distribution(
    scores: &[f64],
    support: &[usize],
    config: &StrategyConfig,
    gamma: Gamma,
    n_prev: u64,
) -> Result<SamplingDistribution> {
    match config.kind {
        StrategyKind::Igw | StrategyKind::Greedy => {
            igw_over(scores, support, gamma.value(support.len()))
        }
        StrategyKind::Boltzmann => boltzmann_over(scores, support, config.beta, n_prev),
        StrategyKind::EpsilonGreedy => epsilon_greedy_over(scores, support, config.epsilon),
    }
}

fn by_score_desc(scores: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }
}

/// Ids of the `n` highest scores, best first, lowest id on ties.
pub fn top_n(scores: &[f64], n: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..scores.len()).collect();
    let cmp = by_score_desc(scores);
    if n == 0 {
        return Vec::new();
    }
    if n < ids.len() {
        ids.select_nth_unstable_by(n - 1, &cmp);
        ids.truncate(n);
    }
    ids.sort_unstable_by(&cmp);
    ids
}

/// Picks `k` distinct candidates: `k - r` greedy slots followed by `r` sequential draws, each
/// from the configured distribution over the candidates not yet chosen. Explore slot `j` draws
/// from the child stream `rng.stream(&[j])`.
pub fn select_topk(
    scores: &[f64],
    config: &StrategyConfig,
    gamma: Gamma,
    n_prev: u64,
    rng: &Rng,
) -> Result<Vec<usize>> {
    let k = config.k;
    if scores.len() < k {
        return Err(Error::InvalidArgument(format!(
            "{} candidates cannot fill {k} slots",
            scores.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {s}")));
    }
    let greedy = k - config.explore_slots();
    let mut chosen = top_n(scores, greedy);
    if greedy == k {
        return Ok(chosen);
    }
    let mut taken = vec![false; scores.len()];
    for &c in &chosen {
        taken[c] = true;
    }
    let mut remaining: Vec<usize> = (0..scores.len()).filter(|&i| !taken[i]).collect();
    for slot in greedy..k {
        let dist = slot_distribution(scores, &remaining, config, gamma, n_prev)?;
        let pick = dist.sample(&mut rng.stream(&[slot as u64]));
        let pos = remaining
            .iter()
            .position(|&id| id == pick)
            .expect("sampled id comes from the remaining support");
        remaining.remove(pos);
        chosen.push(pick);
    }
    Ok(chosen)
}

/// Both sides of the top-k gap inequality for a score vector `v` and distinct indices `chosen`
/// (`|chosen| = k`): returns `(sum_j [v(top_k) - v(chosen_j)]_+, sum_j (v(top_j) - v(chosen_j)))`
/// where `top_1..top_k` are the indices of the `k` largest coordinates. The first never exceeds
/// the second.
pub fn top_k_gap_bound(v: &[f64], chosen: &[usize]) -> (f64, f64) {
    let k = chosen.len();
    let top = top_n(v, k);
    let kth = v[top[k - 1]];
    let lhs = chosen.iter().map(|&a| (kth - v[a]).max(0.0)).sum();
    let rhs = top.iter().zip(chosen).map(|(&t, &a)| v[t] - v[a]).sum();
    (lhs, rhs)
}
