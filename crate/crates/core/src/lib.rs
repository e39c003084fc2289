//! Leaf-depth statistics of pure-birth (Yule) trees.
//!
//! * [`sim`] simulates the jump chain and the continuous-time process on a
//!   leaf-depth histogram.
//! * [`exact`] evaluates the moment recurrences, the finite-time formulas
//!   and their limits, and enumerates small trees exactly.
//! * [`stats`] holds ensemble estimators and bootstrap intervals.
//! * [`experiments`] runs ensembles over time grids.
//!
//! Replicate ensembles and bootstrap resamples run on rayon when the
//! `parallel` feature (on by default) is enabled; see [`exec::Exec`].

pub mod error;
pub mod exact;
pub mod exec;
pub mod experiments;
pub mod rng;
pub mod sim;
pub mod stats;
mod sum;

pub use error::{Error, Result};
pub use exec::Exec;
pub use sum::CompensatedSum;
