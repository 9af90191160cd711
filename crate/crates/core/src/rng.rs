//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded through
//! [`rng_from_seed`]. ChaCha8 output is specified bit-for-bit and does not
//! depend on platform or word size, so a seed reproduces the same draws
//! everywhere.
//!
//! Independent sub-streams are derived with [`derive_seed`]: the parent seed
//! and each path component are folded through the SplitMix64 finaliser,
//!
//! ```text
//! h0 = mix(parent ^ 0x9E3779B97F4A7C15)
//! hk = mix(h(k-1) ^ (component_k * 0xD1B54A32D192ED03 + k))
//! ```
//!
//! so that `derive_seed(s, &[n, i])` names the stream of run `i` at size `n`
//! without any dependence on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of the sub-stream addressed by `path` below `parent`.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    let mut h = mix64(parent ^ 0x9E37_79B9_7F4A_7C15);
    for (k, &c) in path.iter().enumerate() {
        h = mix64(h ^ c.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(k as u64 + 1));
    }
    h
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
