//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by `(master, stream, index)`
//! so that work items can be generated in any order, or in parallel, and
//! still reproduce bit-for-bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the crate. Distinct tags keep unrelated consumers of
/// one master seed statistically independent.
pub mod stream {
    pub const SAMPLE: u64 = 0x5341_4d50;
    pub const TRIAL_SPLIT: u64 = 0x5350_4c54;
    pub const TRIAL_FIT: u64 = 0x4649_5400;
    pub const TREE: u64 = 0x5452_4545;
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const LEVEL_ONE: u64 = 0x4c56_4c31;
    pub const META: u64 = 0x4d45_5441;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
