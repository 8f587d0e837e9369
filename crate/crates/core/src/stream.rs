//! Counter-addressed uniform streams.
//!
//! Every uniform used by the library is a pure function of a key
//! `(seed, stream, index)`: a ChaCha8 keystream keyed by `seed`, with the
//! 64-bit stream id selecting an independent keystream and `index` the word
//! offset inside it. Draws therefore do not depend on scheduling, and any
//! split of the work across threads reproduces the same numbers.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream id reserved for the weight stream θ₁, θ₂, … of random-weight schemes.
pub const THETA_STREAM: u64 = u64::MAX;

/// Keyed generator from which independent addressed streams are cut.
#[derive(Debug, Clone)]
pub struct StreamKey {
    base: ChaCha8Rng,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for replication `rep` at sample size `n`.
    pub fn replication(&self, n: usize, rep: u64) -> UniformStream {
        debug_assert!((n as u64) < 1 << 32 && rep < 1 << 32);
        self.stream(((n as u64) << 32) | rep, 0)
    }

    /// Stream `id`, positioned at its `index`-th uniform.
    pub fn stream(&self, id: u64, index: u64) -> UniformStream {
        let mut rng = self.base.clone();
        rng.set_stream(id);
        // one u64 is two 32-bit keystream words
        rng.set_word_pos(2 * index as u128);
        UniformStream { rng }
    }
}

/// Sequential reader over one addressed stream.
#[derive(Debug, Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    /// Next uniform in the open interval (0, 1).
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}
