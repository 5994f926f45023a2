//! Seeded random streams.
//!
//! Every generator is ChaCha8 keyed by `rand_chacha`'s `seed_from_u64` on the
//! master seed. Independent trials use the same key with the ChaCha stream id
//! set to the trial index, so trial `t` of a run is reproducible on its own
//! and independent of how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for trial `stream` under master `seed`.
pub fn trial_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}
