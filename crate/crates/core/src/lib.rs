//! Sample-based Earth Mover's Distance closeness testing and estimation.
//!
//! Distributions live on the box `[0, Δ]^d` under the ℓ1 metric, or on the
//! nodes of a weighted tree. Exact EMD comes from a min-cost flow solver and
//! doubles as the ground-truth oracle in the experiment harness.

pub mod budget;
pub mod cluster;
pub mod coarsening;
pub mod distribution;
pub mod error;
pub mod exact;
pub mod harness;
pub mod l1;
pub mod sampling;
pub mod tree;
pub mod verdict;

pub use distribution::{l1_distance, DiscreteDistribution, Domain, Point};
pub use error::{Error, Result};
pub use exact::{emd_exact, optimal_flow};
pub use sampling::{SampleSource, Sampler};
pub use verdict::{Decision, EstimateReport, SamplesUsed, TestVerdict};
