//! Seed fan-out and random streams.
//!
//! Every stochastic component draws from its own ChaCha8 stream. Child seeds
//! are derived from a parent seed and a key path with a splitmix64 mix, so
//! that `derive(derive(s, a), b)` never aliases `derive(s, b)` for `a != b`
//! in practice and changing one key leaves unrelated streams untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Stream = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 finalizer.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `keys` into `parent`, one splitmix round per key.
pub fn derive(parent: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(parent), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Stable 64-bit key for a label (FNV-1a).
pub fn label(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut Stream) -> f64 {
    StandardNormal.sample(rng)
}
