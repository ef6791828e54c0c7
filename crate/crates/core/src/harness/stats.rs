use std::fmt;

/// Progress of a run at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    pub cumulative_reward: f64,
    /// `cumulative_reward / t`.
    pub progressive_mean: f64,
    /// Only tracked against a realizable environment.
    pub cumulative_regret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProgressiveStats {
    pub checkpoints: Vec<Checkpoint>,
    /// Reward collected at each step (sum over all played slots).
    pub step_rewards: Vec<f64>,
    pub step_regrets: Option<Vec<f64>>,
    pub played_slots: u64,
    pub observed_slots: u64,
}

impl ProgressiveStats {
    /// Powers of two up to `horizon`, plus `horizon` itself.
    pub fn checkpoint_grid(horizon: u64) -> Vec<u64> {
        let mut grid: Vec<u64> = (0..64)
            .map(|i| 1u64 << i)
            .take_while(|&t| t <= horizon)
            .collect();
        if grid.last() != Some(&horizon) && horizon > 0 {
            grid.push(horizon);
        }
        grid
    }

    pub fn from_steps(step_rewards: Vec<f64>, step_regrets: Option<Vec<f64>>) -> Self {
        let horizon = step_rewards.len() as u64;
        let grid = Self::checkpoint_grid(horizon);
        let mut checkpoints = Vec::with_capacity(grid.len());
        let (mut reward, mut regret) = (0.0, 0.0);
        let mut next = grid.iter().peekable();
        for (i, r) in step_rewards.iter().enumerate() {
            reward += r;
            if let Some(g) = &step_regrets {
                regret += g[i];
            }
            let t = i as u64 + 1;
            if next.peek() == Some(&&t) {
                next.next();
                checkpoints.push(Checkpoint {
                    t,
                    cumulative_reward: reward,
                    progressive_mean: reward / t as f64,
                    cumulative_regret: step_regrets.as_ref().map(|_| regret),
                });
            }
        }
        ProgressiveStats {
            checkpoints,
            step_rewards,
            step_regrets,
            played_slots: 0,
            observed_slots: 0,
        }
    }

    pub fn horizon(&self) -> u64 {
        self.step_rewards.len() as u64
    }

    pub fn final_mean(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.progressive_mean)
    }

    /// Regret accumulated over steps `from + 1 ..= to` (1-based).
    pub fn regret_between(&self, from: u64, to: u64) -> Option<f64> {
        let g = self.step_regrets.as_ref()?;
        Some(g[from as usize..to as usize].iter().sum())
    }

    pub fn observed_fraction(&self) -> f64 {
        if self.played_slots == 0 {
            0.0
        } else {
            self.observed_slots as f64 / self.played_slots as f64
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanSe {
                mean: f64::NAN,
                se: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        MeanSe { mean, se, n }
    }
}

impl fmt::Display for MeanSe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.se)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Win,
    Draw,
    Loss,
}

/// Win/draw/loss of `a` against `b`: a difference counts when it exceeds two combined standard
/// errors.
pub fn compare(a: &MeanSe, b: &MeanSe) -> Outcome {
    let diff = a.mean - b.mean;
    let margin = 2.0 * (a.se * a.se + b.se * b.se).sqrt();
    if diff > margin {
        Outcome::Win
    } else if -diff > margin {
        Outcome::Loss
    } else {
        Outcome::Draw
    }
}
