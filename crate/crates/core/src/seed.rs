//! Seed fan-out.
//!
//! A run seed is expanded into independent substreams by hashing the seed
//! together with a path of integer tags (`[stream, iteration, episode, ...]`)
//! through SplitMix64. Each substream seeds its own ChaCha8 generator, so the
//! draws of one episode never depend on how many episodes ran before it or on
//! which worker executed it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags used by the orchestrator.
pub mod stream {
    pub const BUILDER_INIT: u64 = 1;
    pub const MODELLING: u64 = 2;
    pub const GUIDING: u64 = 3;
    pub const ARCHITECT_BC: u64 = 4;
    pub const BUILDER_BC: u64 = 5;
    pub const EVAL: u64 = 6;
    pub const MEASUREMENT: u64 = 7;
    pub const BASELINE_NET: u64 = 8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit child seed from `seed` and a tag path.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

/// A generator for the substream identified by `path`.
pub fn rng(seed: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(seed, path))
}
