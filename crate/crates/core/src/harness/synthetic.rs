//! Realizable environment: per-arm linear mean rewards fit to a dataset's label indicators.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hierarchy::ArmId;
use crate::oracle::ridge_fit;
use crate::rng::Rng;
use crate::sampling::top_n;
use crate::sparse::{AugmentedWeights, SparseVector};

use super::dataset::MultiLabelDataset;

#[derive(Debug, Clone)]
pub struct RealizableEnv {
    dim: usize,
    weights: Vec<AugmentedWeights>,
    noise_sd: f64,
}

impl RealizableEnv {
    /// Fits one ridge regressor per arm on `(row, 1[arm is positive])` over the whole dataset.
    /// The environment then emits the clamped fitted mean plus clamped Gaussian noise.
    pub fn fit(dataset: &MultiLabelDataset, noise_sd: f64, l2_penalty: f64) -> Result<Self> {
        if !noise_sd.is_finite() || noise_sd < 0.0 {
            return Err(Error::InvalidArgument(format!("noise sd {noise_sd}")));
        }
        if dataset.is_empty() {
            return Err(Error::InvalidArgument("cannot fit means on an empty dataset".into()));
        }
        let weights = (0..dataset.num_labels())
            .into_par_iter()
            .map(|a| {
                let samples: Vec<(&SparseVector, f64)> = dataset
                    .rows()
                    .iter()
                    .zip(dataset.labels())
                    .map(|(x, ls)| {
                        let y = if ls.binary_search(&(a as ArmId)).is_ok() { 1.0 } else { 0.0 };
                        (x, y)
                    })
                    .collect();
                ridge_fit(&samples, dataset.dim(), l2_penalty)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RealizableEnv {
            dim: dataset.dim(),
            weights,
            noise_sd,
        })
    }

    pub fn from_weights(dim: usize, weights: Vec<AugmentedWeights>, noise_sd: f64) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| w.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: w.dim(),
            });
        }
        Ok(RealizableEnv {
            dim,
            weights,
            noise_sd,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn weights(&self) -> &[AugmentedWeights] {
        &self.weights
    }

    /// Mean reward of `arm` at `x`, clamped to `[0, 1]`.
    pub fn mean(&self, x: &SparseVector, arm: ArmId) -> f64 {
        self.weights[arm as usize]
            .predict_raw_unchecked(x)
            .clamp(0.0, 1.0)
    }

    pub fn means(&self, x: &SparseVector) -> Vec<f64> {
        (0..self.weights.len() as ArmId).map(|a| self.mean(x, a)).collect()
    }

    pub fn sample_reward(&self, x: &SparseVector, arm: ArmId, rng: &mut Rng) -> f64 {
        let mean = self.mean(x, arm);
        if self.noise_sd == 0.0 {
            return mean;
        }
        let noise = Normal::new(0.0, self.noise_sd).expect("validated sd");
        (mean + noise.sample(rng)).clamp(0.0, 1.0)
    }

    /// Sum of the `k` largest means at `x`.
    pub fn best_value(&self, means: &[f64], k: usize) -> f64 {
        top_n(means, k).into_iter().map(|a| means[a]).sum()
    }

    /// Expected top-k regret of playing `chosen` at `x`.
    pub fn regret(&self, x: &SparseVector, chosen: &[ArmId]) -> f64 {
        let means = self.means(x);
        let got: f64 = chosen.iter().map(|&a| means[a as usize]).sum();
        (self.best_value(&means, chosen.len()) - got).max(0.0)
    }
}
