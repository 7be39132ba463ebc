//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a
//! `(seed, index)` pair, so that Monte-Carlo runs, g-sets and sweep points
//! can be evaluated in any order (or in parallel) and still reproduce
//! bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default seed used by the CLI when none is given.
pub const DEFAULT_SEED: u64 = 42;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `seed`.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// RNG for the `index`-th child stream of `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, index))
}

/// The `set_index`-th random set of `m` expectation values, uniform on
/// `[-1, 1]^m`, drawn from the child stream `(seed, set_index)`.
pub fn g_set(seed: u64, set_index: u64, m: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, set_index);
    (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect()
}
