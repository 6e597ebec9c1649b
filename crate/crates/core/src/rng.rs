//! Deterministic random substreams.
//!
//! Every stochastic step derives its generator from the run seed plus a path of
//! integer labels (round, entry, repeat, ...). Work items therefore draw the
//! same numbers no matter which thread evaluates them or in which order.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Labels for the top-level stream families used by the experiment runner.
pub mod label {
    pub const GAME: u64 = 0x67616d65;
    pub const ENV: u64 = 0x656e76;
    pub const SELECT: u64 = 0x73656c;
    pub const EVAL: u64 = 0x6576616c;
    pub const HALLUCINATE: u64 = 0x68616c;
    pub const RANKS: u64 = 0x726e6b;
    pub const CURRENT: u64 = 0x637572;
    pub const BURN_IN: u64 = 0x6275726e;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a seed with a path of labels into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |h, &p| splitmix64(h ^ splitmix64(p.wrapping_add(0x5851_f42d))))
}

pub fn substream(seed: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, path))
}
