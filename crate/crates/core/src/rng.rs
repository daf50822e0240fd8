//! Reproducible random streams.
//!
//! Every stochastic operation takes a caller-owned `&mut R: Rng`. Runs that fan
//! out over trials derive one stream per trial with [`stream`]: the generator
//! is ChaCha20 keyed by `seed_from_u64(seed)` (the `rand_core` PCG32 key
//! expansion), and the trial index selects the 64-bit ChaCha stream id. Streams
//! with different indices never overlap, so trial `i` produces the same numbers
//! no matter how many other trials run or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Independent sub-stream `index` of the master `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
