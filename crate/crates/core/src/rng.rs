//! Deterministic seed derivation.
//!
//! Every run owns a single root seed; worker, per-game, and per-state
//! RNG streams are derived from it with a splitmix64 hash so results do
//! not depend on thread scheduling or call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep derived seeds for unrelated purposes disjoint.
pub mod stream {
    pub const NET_INIT: u64 = 0x1;
    pub const SELFPLAY_GAME: u64 = 0x2;
    pub const TRAIN_BATCH: u64 = 0x3;
    pub const EVAL_STATE: u64 = 0x4;
    pub const MATCH_GAME: u64 = 0x5;
    pub const DETECT_GAME: u64 = 0x6;
}

/// splitmix64 finalizer; full avalanche, cheap, stable across platforms.
pub fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive a child seed from a root seed, a stream tag, and an index.
pub fn derive(root: u64, stream: u64, index: u64) -> u64 {
    mix(root ^ mix(stream) ^ mix(index).rotate_left(17))
}

/// Seeded RNG for one derived stream.
pub fn rng_for(root: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, stream, index))
}
