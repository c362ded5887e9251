//! Reproducible random tapes.
//!
//! A tape is the pair `(master_seed, stream_index)`. Every consumer asks the
//! tape for a [`Slot`] and receives an independent ChaCha8 stream keyed by the
//! master seed, with the stream id `stream_index * SLOTS + slot`. Because each
//! slot is its own counter-based stream, the draws for one slot never depend
//! on how many draws another slot consumed, and replicate `i` of an ensemble
//! sees the same numbers whatever the thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type TapeRng = ChaCha8Rng;

/// Number of slots reserved per stream index.
pub const SLOTS: u64 = 16;

/// Named sub-streams of a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Slot {
    /// Bernoulli(p) memory coins.
    Epsilon = 0,
    /// Uniform parent index U[n].
    Parent = 1,
    /// Echo multipliers.
    Echo = 2,
    /// Innovation spins.
    Spin = 3,
    /// Urn extractions.
    Urn = 4,
    /// Exponential waiting times of the Yule clock.
    Clock = 5,
    /// Uniform variables of distributional recursions.
    Uniform = 6,
    /// Index draws from a sample pool.
    Index = 7,
    /// Anything else a sampler needs.
    Aux = 8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomTape {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RandomTape {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        assert!(
            stream_index < u64::MAX / SLOTS,
            "stream index {stream_index} overflows the slot layout"
        );
        RandomTape {
            master_seed,
            stream_index,
        }
    }

    /// A tape on the same key with another stream index.
    pub fn with_stream(&self, stream_index: u64) -> Self {
        RandomTape::new(self.master_seed, stream_index)
    }

    /// Tape for replicate `i` of a family rooted at this tape.
    ///
    /// Replicates are laid out after the root stream so that `child(i)` for
    /// distinct `i` never collide with each other or with the root.
    pub fn child(&self, i: u64) -> Self {
        let base = self.stream_index.wrapping_mul(1 << 24);
        RandomTape::new(self.master_seed, (base + 1 + i) % (u64::MAX / SLOTS))
    }

    /// A fresh master key derived from this tape and a label. Used to give
    /// unrelated experiments disjoint randomness under one user seed.
    pub fn derive(&self, label: &str) -> Self {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        let key = splitmix64(self.master_seed ^ splitmix64(h ^ self.stream_index));
        RandomTape::new(key, 0)
    }

    pub fn rng(&self, slot: Slot) -> TapeRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index * SLOTS + slot as u64);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The four per-step streams of a walk.
pub struct WalkStreams {
    pub epsilon: TapeRng,
    pub parent: TapeRng,
    pub echo: TapeRng,
    pub spin: TapeRng,
}

impl WalkStreams {
    pub fn new(tape: &RandomTape) -> Self {
        WalkStreams {
            epsilon: tape.rng(Slot::Epsilon),
            parent: tape.rng(Slot::Parent),
            echo: tape.rng(Slot::Echo),
            spin: tape.rng(Slot::Spin),
        }
    }
}
