//! Seeded random streams.
//!
//! Every seeded operation derives its generator from a 64-bit master seed.
//! Training draws come from ChaCha stream 0 and evaluation draws from
//! stream 1 of the same key, so the two never share random words.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type NsbRng = ChaCha8Rng;

pub const TRAINING_STREAM: u64 = 0;
pub const EVALUATION_STREAM: u64 = 1;

pub fn rng_for_stream(seed: u64, stream: u64) -> NsbRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn training_rng(seed: u64) -> NsbRng {
    rng_for_stream(seed, TRAINING_STREAM)
}

pub fn evaluation_rng(seed: u64) -> NsbRng {
    rng_for_stream(seed, EVALUATION_STREAM)
}
