use crate::hierarchy::ArmId;
use crate::rng::Rng;

/// Which of `k` slots reveal their reward: each independently with probability `c`.
pub fn observation_mask(k: usize, c: f64, rng: &mut Rng) -> Vec<bool> {
    (0..k).map(|_| rng.uniform() < c).collect()
}

/// Replays one round against a row's positive labels: arm rewards are 1 for positives and 0
/// otherwise, and each slot is observed with probability `c`. Returns `(slot, reward)` for the
/// observed slots.
pub fn simulate_round(positives: &[ArmId], chosen: &[ArmId], c: f64, rng: &mut Rng) -> Vec<(usize, f64)> {
    debug_assert!(positives.windows(2).all(|w| w[0] < w[1]));
    let mask = observation_mask(chosen.len(), c, rng);
    chosen
        .iter()
        .zip(mask)
        .enumerate()
        .filter(|(_, (_, seen))| *seen)
        .map(|(slot, (a, _))| (slot, indicator_reward(positives, *a)))
        .collect()
}

pub fn indicator_reward(positives: &[ArmId], arm: ArmId) -> f64 {
    if positives.binary_search(&arm).is_ok() {
        1.0
    } else {
        0.0
    }
}
