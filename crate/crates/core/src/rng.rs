//! Reproducible random streams.
//!
//! Every stochastic routine takes a [`StreamSeed`] and asks it for one
//! generator per work item (trajectory, path, strip). The generator is
//! ChaCha8 keyed by the master seed and a domain tag, with the item index
//! as the ChaCha stream id, so item `i` draws the same numbers no matter
//! which thread runs it or in which order items are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    master: u64,
    domain: u64,
}

impl StreamSeed {
    pub fn new(master: u64) -> Self {
        Self { master, domain: 0 }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Derives an independent family of streams, e.g. for the two sides of
    /// a two-sample comparison driven by a single user seed.
    pub fn domain(&self, tag: &str) -> Self {
        // FNV-1a over the tag, folded with the parent domain
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.domain.rotate_left(17);
        for b in tag.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        Self {
            master: self.master,
            domain: h,
        }
    }

    pub fn stream(&self, index: u64) -> StreamRng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&self.domain.to_le_bytes());
        key[16..24].copy_from_slice(b"uict-rng");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

/// Uniform draw on [0, 1) with 53 bits of resolution.
#[inline]
pub fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}
