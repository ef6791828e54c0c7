//! Doubling epoch schedule: epoch `l` covers steps `N_{l-1} + 1 ..= N_l` with `N_l = 2^l` and
//! `N_0 = 0`, so epoch 1 is steps 1 and 2.

/// `N_l`.
pub fn boundary(epoch: u32) -> u64 {
    if epoch == 0 {
        0
    } else {
        1u64 << epoch
    }
}

/// Epoch containing step `t >= 1`.
pub fn epoch_of(t: u64) -> u32 {
    if t <= 2 {
        1
    } else {
        64 - (t - 1).leading_zeros()
    }
}

/// True when step `t` is the first step of an epoch after the first one.
pub fn starts_epoch(t: u64) -> bool {
    t >= 3 && (t - 1).is_power_of_two()
}

/// Number of refits performed during steps `1..=t`.
pub fn refits_through(t: u64) -> u64 {
    if t < 3 {
        0
    } else {
        epoch_of(t) as u64 - 1
    }
}
