//! Deterministic seed derivation.
//!
//! Every stream of random numbers in the crate is a ChaCha8 generator whose
//! seed is derived from a base seed and a path of integer coordinates
//! (cell, replicate, chunk, ...) with the SplitMix64 finalizer. Because the
//! derivation is a pure function of the coordinates, work can be split across
//! threads without changing any draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `base` with each coordinate in turn:
/// `s_0 = splitmix64(base)`, `s_{k+1} = splitmix64(s_k ^ splitmix64(c_k))`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

pub fn rng_for(base: u64, path: &[u64]) -> StreamRng {
    rng_from_seed(derive_seed(base, path))
}
