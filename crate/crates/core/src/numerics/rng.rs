//! Deterministic random-stream derivation.
//!
//! Every stream is keyed by a master seed plus a list of integer tags (cell
//! index, replication index, ...), so any unit of work can be reproduced in
//! isolation and streams never depend on scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Factory for independent, reproducible random streams.
#[derive(Debug, Clone, Copy)]
pub struct Streams {
    master: u64,
}

impl Streams {
    pub fn new(master: u64) -> Self {
        Streams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// A 64-bit sub-seed mixed from the master seed and the tags.
    pub fn subseed(&self, tags: &[u64]) -> u64 {
        let mut state = self.master ^ 0x51c6_4e6d_1d1c_79b5;
        let mut acc = splitmix64(&mut state);
        for &t in tags {
            state ^= t.wrapping_mul(0xff51_afd7_ed55_8ccd).wrapping_add(1);
            acc ^= splitmix64(&mut state);
        }
        acc
    }

    /// A ChaCha stream keyed by `(master, tags)`.
    pub fn derive(&self, tags: &[u64]) -> ChaCha8Rng {
        let mut state = self.subseed(tags);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
