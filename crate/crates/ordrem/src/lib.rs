//! Desk-scale machinery behind removal lemmas and constant-query testers
//! for hereditary properties of vertex-ordered edge-colored graphs and
//! ordered matrices: exact densities and indices, robust partitions, a
//! flow-based simultaneous rounding, quantitative undesirability-preserving
//! Ramsey extraction, the combined interval/graph regularity scheme,
//! threshold-matrix cleaning with witness extraction, embeddability, and
//! one-sided sampling testers — each validated against brute-force oracles.
//!
//! Start with the runnable examples (`cargo run --example pipeline`) or the
//! `ordrem` binary; the `tester::pipeline_demo` entry point strings every
//! stage together.

pub mod cli;
pub mod embed;
pub mod error;
pub mod generators;
pub mod graphs;
pub mod io;
pub mod metrics;
pub mod partition;
pub mod ramsey;
pub mod rat;
pub mod rng;
pub mod rounding;
pub mod scheme;
pub mod tester;
pub mod threshold;

pub use error::{Error, Result};
