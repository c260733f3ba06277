//! Deterministic seed derivation.
//!
//! Every random stream in the pipeline is keyed by a tuple such as
//! `(seed, phase, epoch, batch)` so that results never depend on iteration
//! or thread order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a sequence of keys into one 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(parts: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(parts))
}

/// Stream tags keep derived seeds for different purposes apart.
pub mod tag {
    pub const SPLIT: u64 = 1;
    pub const PAIRS: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const MASKING: u64 = 4;
    pub const DROPOUT: u64 = 5;
    pub const EVAL_MASK: u64 = 6;
    pub const VALIDATION: u64 = 7;
    pub const FIXTURE: u64 = 8;
    pub const INIT: u64 = 9;
}
