//! Generalized linear cascades: simulation over weighted directed graphs and
//! recovery of each node's incoming edge weights by ℓ1-regularized maximum
//! likelihood.
//!
//! The crate is split along the data flow:
//!
//! * [`graph`] builds topologies, samples weights and handles the TSV format.
//! * [`cascade`] defines the inverse link functions, simulates cascades and
//!   turns traces into per-node measurements.
//! * [`recovery`] holds the per-node objectives and the estimators.
//! * [`diagnostics`] checks Gram / Hessian conditions empirically.
//! * [`evaluation`] computes metrics and runs factorial experiments.

pub mod cascade;
pub mod diagnostics;
pub mod evaluation;
pub mod graph;
pub mod recovery;
pub mod seed;

pub use cascade::{CascadeModel, CascadeTrace, MeasurementSet, ModelKind};
pub use graph::{Graph, GraphTopology};
pub use recovery::{InferenceResult, SolverConfig};
