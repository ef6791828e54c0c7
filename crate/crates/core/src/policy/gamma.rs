//! IGW scaling schedules.

use crate::error::{Error, Result};
use crate::sampling::GammaSchedule;

/// Inputs of the theoretical schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub schedule: GammaSchedule,
    /// Lower bound on the per-slot feedback probability.
    pub feedback_floor: f64,
    /// Candidate count the schedule is computed for (`A` flat, `Z` reduced).
    pub num_candidates: usize,
    pub k: usize,
    pub delta: f64,
    /// Stand-in for `log |F|`.
    pub log_class_size: f64,
    pub horizon: u64,
    /// Constant of the practical schedule.
    pub practical_c: f64,
    /// Uniform misspecification level.
    pub misspecification: f64,
}

impl GammaParams {
    /// Defaults with `log |F|` replaced by `dim * ln(T)`.
    pub fn new(schedule: GammaSchedule, num_candidates: usize, k: usize, dim: usize, horizon: u64) -> Self {
        GammaParams {
            schedule,
            feedback_floor: 1.0,
            num_candidates,
            k,
            delta: 0.1,
            log_class_size: dim as f64 * (horizon.max(2) as f64).ln(),
            horizon,
            practical_c: 1.0,
            misspecification: 0.0,
        }
    }

    pub fn with_candidates(mut self, n: usize) -> Self {
        self.num_candidates = n;
        self
    }

    /// `log(|F| T^3 / delta)`.
    pub fn confidence_log(&self) -> Result<f64> {
        if self.delta.is_nan() || self.delta <= 0.0 || self.horizon == 0 {
            return Err(Error::InvalidArgument("delta and T must be positive".into()));
        }
        let v = self.log_class_size + 3.0 * (self.horizon as f64).ln() - self.delta.ln();
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "log(|F| T^3 / delta) = {v} must be positive"
            )));
        }
        Ok(v)
    }

    /// `c (A - k + 1)`.
    fn scaled_support(&self) -> Result<f64> {
        if self.num_candidates < self.k {
            return Err(Error::InvalidArgument(format!(
                "{} candidates for k = {}",
                self.num_candidates, self.k
            )));
        }
        if !(self.feedback_floor > 0.0 && self.feedback_floor <= 1.0) {
            return Err(Error::InvalidArgument("feedback floor must lie in (0, 1]".into()));
        }
        Ok(self.feedback_floor * (self.num_candidates - self.k + 1) as f64)
    }
}

/// `(1/32) sqrt(c (A - k + 1) N / (162 log(|F| T^3 / delta)))`.
pub fn gamma_theoretical_realizable(params: &GammaParams, n_prev: u64) -> Result<f64> {
    let support = params.scaled_support()?;
    let log = params.confidence_log()?;
    Ok((support * n_prev as f64 / (162.0 * log)).sqrt() / 32.0)
}

/// `sqrt(c (A - k + 1)) / (32 sqrt((420 / N) log(|F| T^3 / delta) + 2 eps^2))`; zero before any
/// data has been collected.
pub fn gamma_theoretical_misspecified(params: &GammaParams, n_prev: u64) -> Result<f64> {
    let support = params.scaled_support()?;
    let log = params.confidence_log()?;
    if n_prev == 0 {
        return Ok(0.0);
    }
    let eps = params.misspecification;
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidArgument(format!("misspecification {eps}")));
    }
    let denom = (420.0 / n_prev as f64 * log + 2.0 * eps * eps).sqrt();
    Ok(support.sqrt() / (32.0 * denom))
}

/// `sqrt(C N A')` with `A'` the number of remaining candidates.
pub fn gamma_practical(n_prev: u64, remaining: usize, c: f64) -> f64 {
    (c * n_prev as f64 * remaining as f64).sqrt()
}

/// Limit of the misspecified schedule as `N` grows.
pub fn misspecified_plateau(params: &GammaParams) -> Result<f64> {
    let support = params.scaled_support()?;
    Ok(support.sqrt() / (32.0 * params.misspecification * 2f64.sqrt()))
}
