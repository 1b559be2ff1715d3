//! Reproducible random streams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream whose key is
//! derived from a master seed and a [`StreamTag`], and whose stream id is the
//! trial index. ChaCha is counter based, so trial `i` sees the same numbers
//! no matter which worker runs it or in what order trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Purpose of a random stream. Each tag yields an independent key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamTag {
    Chips,
    Bits,
    Noise,
}

impl StreamTag {
    fn salt(self) -> u64 {
        match self {
            StreamTag::Chips => 0x6368_6970_735f_7331,
            StreamTag::Bits => 0x6269_7473_5f5f_7332,
            StreamTag::Noise => 0x6e6f_6973_655f_7333,
        }
    }
}

/// Address of one random stream: `(master seed, trial index, tag)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
    pub trial: u64,
}

impl RngSeed {
    pub fn new(master: u64, trial: u64) -> Self {
        Self { master, trial }
    }

    /// Opens the stream for `tag`.
    pub fn stream(&self, tag: StreamTag) -> ChaCha8Rng {
        let mut state = self.master ^ tag.salt();
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.trial);
        rng
    }
}

/// One step of the SplitMix64 generator.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
