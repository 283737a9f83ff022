//! Counter-based random draws. Every draw is addressed by
//! `(seed, stream, index)`, so a pair's draw does not depend on how many
//! other draws happened before it or on which thread made them.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream carrying the per-pair context class.
pub const CLASS_STREAM: u64 = 1;
/// Stream carrying station A's random setting choices.
pub const SETTING_STREAM_A: u64 = 2;
/// Stream carrying station B's random setting choices.
pub const SETTING_STREAM_B: u64 = 3;
/// Stream used by isolated single-subsystem measurement sequences.
pub const ISOLATED_STREAM: u64 = 4;

pub fn keyed_u64(seed: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // one u64 consumes two 32-bit words
    rng.set_word_pos(index as u128 * 2);
    rng.next_u64()
}

/// Uniform in [0, 1) with 53 random bits.
pub fn keyed_unit(seed: u64, stream: u64, index: u64) -> f64 {
    (keyed_u64(seed, stream, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A fair coin.
pub fn keyed_coin(seed: u64, stream: u64, index: u64) -> bool {
    keyed_u64(seed, stream, index) >> 63 == 0
}
