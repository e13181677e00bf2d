//! Seed handling.
//!
//! Every random draw in the crate goes through a [`ChaCha8Rng`] built from an
//! explicit 64-bit seed. Composite seeds (one per sweep cell, per trial, per
//! measurement matrix) are derived with [`mix_seed`], so results never depend
//! on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed: `h = splitmix64(h ^ splitmix64(w))`
/// starting from `h = 0`.
pub fn mix_seed(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0u64, |h, &w| splitmix64(h ^ splitmix64(w)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator positioned on an independent stream of `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
