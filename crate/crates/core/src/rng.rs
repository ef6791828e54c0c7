//! Seeded random streams.
//!
//! Every experiment has one root seed. Independent purposes (data shuffling, slot draws,
//! feedback masks, reward noise) get their own child stream derived from the root seed and a
//! tag path such as `[SELECT, t, slot]`, so changing how many draws one strategy makes never
//! shifts the draws another strategy sees. Each stream is a ChaCha8 generator, which produces the
//! same output on every platform.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tags for the child streams used across the crate.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const SELECT: u64 = 4;
    pub const RESOLVE: u64 = 5;
    pub const FEEDBACK: u64 = 6;
    pub const NOISE: u64 = 7;
    pub const TREE: u64 = 8;
    pub const SYNTH: u64 = 9;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a tag path into a new 64-bit seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |h, &t| splitmix64(h ^ splitmix64(t.wrapping_add(0x632B_E59B_D9B4_E019))))
}

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A child stream keyed by `tags`; independent of how much of `self` has been consumed.
    pub fn stream(&self, tags: &[u64]) -> Rng {
        Rng::new(derive_seed(self.seed, tags))
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
