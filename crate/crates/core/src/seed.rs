//! Seed derivation shared by every randomized component.
//!
//! All streams come from one 64-bit mixer (the SplitMix64 finalizer):
//!
//! ```text
//! z = base + (index + 1) * 0x9E3779B97F4A7C15        (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! A stream seed is then fed to ChaCha8 (`rand_chacha`), whose output is
//! specified independently of platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream index of the seller's private generator inside an episode.
pub const SELLER_STREAM: u64 = 0;
/// Stream index of the buyer-value generator inside an episode.
pub const VALUE_STREAM: u64 = 1;

pub fn mix64(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(base, index))
}
