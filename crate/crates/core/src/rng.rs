//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed and placed on
//! a 64-bit stream id packed from `(trial, run, role)`. Streams with different
//! ids never overlap, so the result of a trial depends only on its indices and
//! never on the order in which workers execute trials.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A single owned random stream.
pub type Stream = ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Role {
    /// The algorithm's own coins (shared across paired runs).
    Internal = 1,
    /// Sample draws (fresh per run).
    Sample = 2,
    /// Experiment-level randomness such as drawing an instance from a prior.
    Prior = 3,
    /// Calibration pilots.
    Pilot = 4,
}

const TRIAL_BITS: u32 = 40;
const RUN_BITS: u32 = 16;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_master(master: u64) -> [u8; 32] {
    let mut state = master;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Derives the stream for `(trial, run, role)` under `master`.
///
/// Panics if `trial` does not fit in 40 bits or `run` in 16 bits.
pub fn derive_stream(master: u64, trial: u64, run: u64, role: Role) -> Stream {
    assert!(trial < (1u64 << TRIAL_BITS), "trial index out of range");
    assert!(run < (1u64 << RUN_BITS), "run index out of range");
    let id = (trial << (RUN_BITS + 8)) | (run << 8) | role as u64;
    let mut rng = ChaCha8Rng::from_seed(key_from_master(master));
    rng.set_stream(id);
    rng
}

/// The two independent streams a tester run consumes.
///
/// Cloning a `SeedSplit` (or just its `internal` half) replays the
/// algorithm's coins exactly, which is how paired runs share randomness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSplit {
    pub internal: Stream,
    pub sample: Stream,
}

impl SeedSplit {
    pub fn new(internal: Stream, sample: Stream) -> Self {
        Self { internal, sample }
    }

    /// Streams for trial `trial`, run `run`: the internal stream ignores
    /// `run` so that all runs of one trial share the same coins.
    pub fn for_trial(master: u64, trial: u64, run: u64) -> Self {
        Self {
            internal: derive_stream(master, trial, 0, Role::Internal),
            sample: derive_stream(master, trial, run, Role::Sample),
        }
    }

    /// Convenience for one-off runs: both halves derived from a single seed.
    pub fn from_seed(seed: u64) -> Self {
        Self::for_trial(seed, 0, 0)
    }

    /// Replaces the sample stream, keeping the internal coins.
    pub fn with_sample(&self, sample: Stream) -> Self {
        Self {
            internal: self.internal.clone(),
            sample,
        }
    }
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
