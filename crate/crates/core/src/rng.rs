//! Seeded randomness.
//!
//! All randomness in the crate funnels through a [`SeedTree`]: a root seed
//! plus a label deterministically derive a child stream, so every phase of an
//! experiment (degradation synthesis, weight init, cropping, ...) gets its own
//! reproducible generator. Gaussian samples come from a hand-rolled
//! Box-Muller transform so the byte stream is fully under our control.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hierarchical seed derivation: `(root, label)` → independent RNG stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Derive the RNG for a named phase.
    pub fn rng(&self, label: &str) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut state = self.root ^ 0x9e37_79b9_7f4a_7c15;
        for &b in label.as_bytes() {
            state = splitmix64(state ^ u64::from(b));
        }
        for chunk in seed.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    /// Derive a child tree for a named sub-phase.
    pub fn child(&self, label: &str) -> SeedTree {
        let mut state = self.root ^ 0xd1b5_4a32_d192_ed03;
        for &b in label.as_bytes() {
            state = splitmix64(state ^ u64::from(b));
        }
        SeedTree { root: splitmix64(state) }
    }

    /// Derive a child tree by index (e.g. per training step).
    pub fn child_idx(&self, idx: u64) -> SeedTree {
        SeedTree { root: splitmix64(self.root ^ splitmix64(idx ^ 0xbf58_476d_1ce4_e5b9)) }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One standard-normal sample via Box-Muller.
///
/// Consumes exactly two uniforms per call, which keeps the stream layout
/// independent of any library's ziggurat internals.
pub fn sample_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
