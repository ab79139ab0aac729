//! Seed derivation for reproducible, independently addressable random streams.
//!
//! Every stream is a ChaCha8 generator seeded with `seed_from_u64(seed)` and
//! then moved to a 64-bit stream id with `set_stream`. Stream ids are
//! `(purpose << 32) | index`. Trial seeds are derived from the master seed by
//! the SplitMix64 finalizer, so adding trials or sweep points never changes the
//! seeds of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PURPOSE_PAYLOAD: u64 = 0;
pub const PURPOSE_FADING: u64 = 1;
pub const PURPOSE_NOISE: u64 = 2;
pub const PURPOSE_SCHEDULE: u64 = 3;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines two words into a new seed.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b)
}

/// Seed of trial `trial` at sweep point `point` under `master`.
pub fn trial_seed(master: u64, point: u64, trial: u64) -> u64 {
    mix(mix(master, point), trial)
}

pub fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 32) | (index & 0xffff_ffff));
    rng
}
