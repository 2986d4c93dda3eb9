//! Seed derivation.
//!
//! Every stochastic unit (split, CV repetition, resampler class, tree, weight
//! init) draws its generator from a seed derived from the master seed and a
//! path naming the unit, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes an integer component into a seed.
pub fn derive(seed: u64, component: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ component.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Mixes a string label into a seed (FNV-1a over the bytes, then splitmix).
pub fn derive_str(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive(seed, h)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
