//! Cascade models, simulation and measurement extraction.
//!
//! A generalized linear cascade infects a susceptible node `j` at step
//! `t + 1` with probability `f(<θ_j, X^t>)`, where `X^t` is the indicator of
//! the active set at step `t` and `f` is the model's inverse link.

mod io;
mod link;
mod measurement;
mod simulate;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::GraphError;

pub use io::{read_traces, read_traces_file, write_traces, write_traces_file};
pub use measurement::{extract_measurements, pool_measurements, Measurement, MeasurementSet};
pub use simulate::{batch_simulate, draw_sources, simulate, CascadeTrace};

/// Horizon used for voter cascades when none is configured.
pub const DEFAULT_VOTER_HORIZON: usize = 10;

/// Simulations abort once a trace exceeds this many steps per node.
pub const STEP_CAP_PER_NODE: usize = 10;

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("link function is at a boundary (f(z) in {{0, 1}}) at z = {z}")]
    Boundary { z: f64 },
    #[error("simulation exceeded {cap} steps on {num_nodes} nodes")]
    StepCap { cap: usize, num_nodes: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Ic,
    Voter,
    Cice,
    Logistic,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Ic, ModelKind::Voter, ModelKind::Cice, ModelKind::Logistic];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ic => "ic",
            ModelKind::Voter => "voter",
            ModelKind::Cice => "cice",
            ModelKind::Logistic => "logistic",
        }
    }

    /// Models where a node is contagious for exactly one step, then immune.
    pub fn has_immunity(self) -> bool {
        matches!(self, ModelKind::Ic | ModelKind::Logistic)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ic" => Ok(ModelKind::Ic),
            "voter" => Ok(ModelKind::Voter),
            "cice" => Ok(ModelKind::Cice),
            "logistic" => Ok(ModelKind::Logistic),
            other => Err(CascadeError::Parameter(format!(
                "unknown model '{other}' (expected ic, voter, cice or logistic)"
            ))),
        }
    }
}

/// Model tag plus the parameters of its inverse link and state machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeModel {
    pub kind: ModelKind,
    /// Discretization step of the CICE model.
    pub epsilon: f64,
    /// Threshold `t` of the logistic link `1 / (1 + exp(-z + t))`.
    pub threshold: f64,
    /// Voter horizon `T`; an optional step cap for the other models.
    pub horizon: Option<usize>,
}

impl CascadeModel {
    pub fn ic() -> Self {
        Self::of_kind(ModelKind::Ic)
    }

    pub fn voter(horizon: usize) -> Self {
        Self {
            horizon: Some(horizon),
            ..Self::of_kind(ModelKind::Voter)
        }
    }

    pub fn cice(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::of_kind(ModelKind::Cice)
        }
    }

    pub fn logistic(threshold: f64) -> Self {
        Self {
            threshold,
            ..Self::of_kind(ModelKind::Logistic)
        }
    }

    /// Model with default parameters (ε = 1, t = 0, voter horizon 10).
    pub fn of_kind(kind: ModelKind) -> Self {
        Self {
            kind,
            epsilon: 1.0,
            threshold: 0.0,
            horizon: match kind {
                ModelKind::Voter => Some(DEFAULT_VOTER_HORIZON),
                _ => None,
            },
        }
    }

    pub fn validate(&self) -> Result<(), CascadeError> {
        if self.kind == ModelKind::Cice && !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CascadeError::Parameter(format!(
                "CICE epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.kind == ModelKind::Logistic && !self.threshold.is_finite() {
            return Err(CascadeError::Parameter("logistic threshold must be finite".into()));
        }
        if self.horizon == Some(0) {
            return Err(CascadeError::Parameter("horizon must be at least 1".into()));
        }
        Ok(())
    }

    pub fn voter_horizon(&self) -> usize {
        self.horizon.unwrap_or(DEFAULT_VOTER_HORIZON)
    }
}
