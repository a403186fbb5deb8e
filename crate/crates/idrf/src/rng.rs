//! Splittable, counter-addressed random number streams.
//!
//! Every sampling operation in this crate is a pure function of a
//! [`RngStream`]: the same `(seed, stream_id)` always reproduces the same
//! bits, and distinct stream ids give statistically independent sequences.
//! Streams are split hierarchically (one child per realization, per cell,
//! ...) so parallel synthesis is order-independent.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Address of an independent random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Root stream for a given seed.
    pub fn root(seed: u64) -> Self {
        RngStream { seed, stream_id: 0 }
    }

    /// Derive a child stream. Children of distinct `(stream, index)` pairs
    /// land on distinct 64-bit stream ids with overwhelming probability.
    pub fn child(&self, index: u64) -> Self {
        let mixed = splitmix64(
            self.stream_id ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)),
        );
        RngStream {
            seed: self.seed,
            stream_id: mixed,
        }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_mut(8) {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            chunk.copy_from_slice(&splitmix64(state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
