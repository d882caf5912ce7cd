//! Seed derivation for independent random streams.
//!
//! Every unit of work (trial, trajectory, radar count, ...) gets its own
//! ChaCha stream whose seed is a SplitMix64 hash of the base seed and a list
//! of integer tags. Streams for distinct tag lists do not share state, and
//! results do not depend on the order in which work units are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random number generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `base` to produce a child seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(base, tags))`.
pub fn derived_rng(base: u64, tags: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(base, tags))
}

/// Stable integer tag for a real-valued condition parameter.
pub fn real_tag(x: f64) -> u64 {
    // -0.0 and 0.0 must map to the same stream
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}
