//! Seeded random streams. Every consumer derives an independent ChaCha
//! stream from `(seed, purpose)` so runs are reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the different random consumers.
pub mod purpose {
    pub const BITS: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const FADING: u64 = 3;
    pub const GRAMMAR: u64 = 4;
}

pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// Seed for the `index`-th run derived from a master seed (splitmix64).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal draw.
pub fn standard_normal<R: rand::Rng>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}
