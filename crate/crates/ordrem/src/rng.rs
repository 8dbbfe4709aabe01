//! Seeded, stream-addressable randomness.
//!
//! Every randomized operation takes an explicit `ChaCha8Rng`. A run is fully
//! determined by one 64-bit seed; independent stages and trials derive
//! separate streams via [`stream_id`], so trial-level parallelism cannot
//! change any result.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable FNV-1a hash of a stage label plus a trial index. Used as the
/// ChaCha stream id so that (seed, stage, trial) addresses one RNG stream.
pub fn stream_id(stage: &str, trial: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    for b in trial.to_le_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// RNG for a (seed, stage, trial) triple.
pub fn stream_rng(seed: u64, stage: &str, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(stage, trial));
    rng
}
