//! Seed handling.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! 64-bit seed via `seed_from_u64`. Independent sub-streams (ensemble members,
//! replicas) use the same key with the ChaCha stream number set to the
//! member index, so `(seed, index)` fully determines a member's randomness and
//! members can be evaluated in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for sub-stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a child seed for replica `index` (SplitMix64 finalizer over
/// `seed + (index + 1) * golden_gamma`).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
