//! Seeded random streams.
//!
//! Every run derives its generators from one `u64` seed. A generator is a
//! ChaCha8 keystream keyed by the seed, selected by a 64-bit stream id that
//! packs `(replicate, purpose)`. ChaCha is counter based, so each stream is
//! independent of how many draws other streams have made, and results do not
//! depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for; the discriminant is part of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Stream {
    Losses = 1,
    Instance = 2,
    Learner = 3,
    Adversary = 4,
    Environment = 5,
    Baseline = 6,
    Verification = 7,
}

/// Generator for `(seed, replicate, purpose)`.
pub fn stream(seed: u64, replicate: u32, purpose: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replicate as u64) << 32) | purpose as u64);
    rng
}
