//! Seed derivation for independent, reproducible random streams.
//!
//! Streams are keyed by a master seed plus a tuple of indices (for instance
//! epoch, take, view). Deriving instead of sharing one generator keeps the
//! draws identical whether work items are processed sequentially or in
//! parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `keys` into `seed`. Order matters: `(1, 2)` and `(2, 1)` differ.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k.wrapping_add(GOLDEN))))
}

pub fn stream(seed: u64, keys: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, keys))
}

/// Domain tags that keep streams of unrelated subsystems apart.
pub mod tag {
    pub const TRAIN: u64 = 0x0074_7261_696e;
    pub const EVAL: u64 = 0x6576_616c;
    pub const INIT: u64 = 0x696e_6974;
    pub const SHUFFLE: u64 = 0x7368_7566;
    pub const SCENE: u64 = 0x7363_656e;
    pub const FEATURES: u64 = 0x6665_6174;
    pub const ABLATION: u64 = 0x6162_6c74;
}
