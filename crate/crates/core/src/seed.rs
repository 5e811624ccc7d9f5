//! Stateless seed derivation.
//!
//! Per-cell parameters and per-trial sub-streams are keyed hashes of a master
//! seed, so the same cell or trial sees the same numbers no matter which
//! thread touches it first or in which order work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a list of keys into a seed.
#[inline]
pub fn derive(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix(seed), |acc, &k| mix(acc ^ k.wrapping_mul(GOLDEN)))
}

/// Uniform sample in `[0, 1)` from a hash value (53 mantissa bits).
#[inline]
pub fn unit(hash: u64) -> f64 {
    (hash >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A ChaCha stream for the given key path.
pub fn rng_for(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, keys))
}
