//! Counter-based deterministic random streams.
//!
//! Every random draw in this crate is a pure function of a key assembled by
//! mixing a master seed with structural indices (graph realization, trial,
//! round, node). A draw never depends on how many draws happened before it,
//! so trajectories are identical no matter in which order nodes or trials
//! are evaluated, and exported experiment output is byte-identical across
//! runs.

/// Mixes a 64-bit value through the SplitMix64 finalizer. Full-avalanche:
/// every output bit depends on every input bit.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed stream position. `child` derives sub-streams; `unit_f64` yields
/// the one uniform draw associated with this key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    state: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { state: mix(seed) }
    }

    /// Derives the sub-stream for `index`. Chaining calls builds a key from
    /// a path of indices, e.g. `root.child(trial).child(round).child(node)`.
    pub fn child(&self, index: u64) -> Self {
        SeedStream {
            state: mix(self.state ^ mix(index ^ 0x5851_f42d_4c95_7f2d)),
        }
    }

    /// The uniform draw in `[0, 1)` for this key, with 53 random bits.
    pub fn unit_f64(&self) -> f64 {
        (mix(self.state ^ 0xd6e8_feb8_6659_fd93) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw: true with probability `p`.
    pub fn bernoulli(&self, p: f64) -> bool {
        self.unit_f64() < p
    }
}
