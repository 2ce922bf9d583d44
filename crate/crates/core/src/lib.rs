//! Online assignment of jobs to servers with reusable capacity.
//!
//! Jobs arrive one at a time and must be placed on a compatible server
//! immediately or rejected. A placed job holds one unit for its duration and
//! earns reward × duration. The crate provides the Forward-Looking BALANCE
//! policy and two baselines, a simulator, parameter solvers with their
//! capacity-feasibility conditions, offline optima, dual certificates and
//! instance generators.

pub mod benchmarks;
pub mod engine;
pub mod error;
pub mod format;
pub mod generators;
pub mod model;
pub mod params;
pub mod policies;

pub use error::{Error, Result};
pub use model::{AvailabilityTimeline, CMin, CommitMode, DurationMode, Instance, JobArrival, Offer, Trace};
pub use policies::{FlbParams, Gamma, Policy};
