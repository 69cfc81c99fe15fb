//! Deterministic stream derivation. Every random consumer gets its own
//! ChaCha stream keyed by the master seed and a path of integers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p)))
}

pub fn stream(master: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, path))
}

/// Stream tags, so that unrelated consumers never share a path.
pub mod tag {
    pub const AGENT: u64 = 1;
    pub const POPULATION: u64 = 2;
    pub const ORACLE: u64 = 3;
    pub const FACTOR: u64 = 4;
    pub const GENERATOR: u64 = 5;
    pub const SYNTHETIC: u64 = 6;
}
