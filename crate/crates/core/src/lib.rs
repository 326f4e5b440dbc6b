//! Steady-state evolutionary algorithms with inverse selection.
//!
//! The crate provides the bit-string representation ([`bitcore`]), variation
//! and selection operators ([`operators`]), benchmark functions
//! ([`benchmarks`]), the EA loops ([`engines`]), instance parsers
//! ([`instances`]), the experiment harness ([`harness`]) and the statistics
//! used to compare configurations ([`stats`]).

pub mod benchmarks;
pub mod bitcore;
pub mod engines;
mod error;
pub mod harness;
pub mod instances;
pub mod operators;
pub mod stats;

pub use benchmarks::{
    PeakLabel, Problem, RidgeProblem, RidgeScale, TwoGradientsProblem, TwoMaxProblem,
};
pub use bitcore::{derive_seed, Fitness, Genotype, Population, RngStream};
pub use engines::{Control, EngineConfig, EngineKind, IterationEvent, Observer, RunOutcome};
pub use error::{Error, Result};
pub use operators::{MutationPolicy, Replacement, SelectionPolicy};
