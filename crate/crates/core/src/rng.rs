//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), a
//! counter-based generator: a 64-bit seed is expanded to the 256-bit key with
//! `SeedableRng::seed_from_u64`, a 64-bit stream id selects an independent
//! substream, and the word position can be set directly. Outputs are
//! therefore reproducible across platforms and independent of how work is
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for substream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator positioned so that the next `u64` drawn is the `index`-th
/// `u64` of substream `stream`.
pub fn stream_rng_at(seed: u64, stream: u64, index: u64) -> StreamRng {
    let mut rng = stream_rng(seed, stream);
    // One u64 is two 32-bit words.
    rng.set_word_pos(2 * index as u128);
    rng
}
