//! Replicable uniformity testing.
//!
//! The crate provides explicit finite distributions and samplers ([`dist`]),
//! the TV / collision / chi-square statistics ([`stats`]), the replicable
//! uniformity tester together with random-threshold baselines and the
//! identity tester ([`tester`], [`reduction`]), a deterministic Monte Carlo
//! harness ([`harness`]), and exact small-instance oracles ([`analysis`]).

pub mod analysis;
pub mod config;
pub mod dist;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod reduction;
pub mod rng;
pub mod stats;
pub mod tester;

pub use config::Constants;
pub use dist::{draw_batch, draw_poissonized_batch, make_instance, tv_distance};
pub use dist::{InstanceKind, InstanceSpec, Pmf, SampleBatch, Sampler};
pub use error::{Error, Result};
pub use rng::{derive_stream, Role, SeedSplit, Stream};
pub use tester::{derive_sizes, run_tester, Decision, TesterParams, Verdict};
