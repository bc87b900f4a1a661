//! Seed derivation. Every random stream in a run is a ChaCha8 generator
//! keyed by the run seed plus a path of stream tags and indices, so streams
//! never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags. Training and evaluation streams are disjoint by tag.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const TRAIN_ENV: u64 = 2;
    pub const MINIBATCH: u64 = 3;
    pub const EVAL: u64 = 4;
    pub const FINAL_EVAL: u64 = 5;
    pub const EXPORT: u64 = 6;
    pub const FUZZ: u64 = 7;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(base), |acc, &p| splitmix(acc ^ splitmix(p)))
}

pub fn stream(base: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(base, path))
}
