//! Per-node recovery of incoming edge weights.
//!
//! The log-likelihood of a generalized linear cascade decomposes over
//! target nodes, so each column θ_i is estimated separately from the
//! measurements of node `i`:
//!
//! ```text
//! θ̂_i ∈ argmin_θ  -(1/n) Σ_t [y_t log f(<θ, x_t>) + (1 - y_t) log(1 - f(<θ, x_t>))] + λ ‖θ‖₁
//! ```
//!
//! subject to the model's domain (θ >= 0, and θ <= 1 for the voter model).
//! Besides this sparse MLE, the module provides the unpenalized MLE, a
//! squared-loss lasso and a greedy forward selection as benchmarks.

mod greedy;
mod infer;
pub(crate) mod objective;
mod solver;

use thiserror::Error;

use crate::cascade::{CascadeModel, MeasurementSet, ModelKind};
use crate::graph::{theta_to_p, Graph};

pub use greedy::{solve_greedy, GreedyConfig};
pub use infer::{
    infer_graph, solve_node, Estimator, InferenceSettings, InferredGraph, LambdaRule, NodeReport,
    NodeStatus,
};
pub use objective::{
    gradient, gradient_with, hessian, hessian_with, neg_log_likelihood, neg_log_likelihood_with,
    squared_loss,
};

pub const DEFAULT_EPS_CLAMP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("node {node} has no measurements")]
    EmptyMeasurements { node: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical { iteration: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub max_iterations: usize,
    /// Stops once the relative objective change and the proximal step norm
    /// `‖θ⁺ − y‖₂` (relative to `1 + ‖θ‖₂`) both fall below this value.
    pub tolerance: f64,
    /// Step-size multiplier applied on each failed sufficient-decrease test.
    pub backtrack_shrink: f64,
    pub initial_step: f64,
    /// Probabilities inside the logarithms are clamped to
    /// `[eps_clamp, 1 - eps_clamp]`.
    pub eps_clamp: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            max_iterations: 5000,
            tolerance: 1e-8,
            backtrack_shrink: 0.5,
            initial_step: 1.0,
            eps_clamp: DEFAULT_EPS_CLAMP,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RecoveryError> {
        let bad = |msg: &str| Err(RecoveryError::Parameter(msg.to_string()));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be nonnegative");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(self.backtrack_shrink > 0.0 && self.backtrack_shrink < 1.0) {
            return bad("backtrack_shrink must lie in (0, 1)");
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial_step must be positive");
        }
        if !(self.eps_clamp > 0.0 && self.eps_clamp <= 1e-3) {
            return bad("eps_clamp must lie in (0, 1e-3]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub theta_hat: Vec<f64>,
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
    /// Number of measurements the estimate was fitted on.
    pub n: usize,
    /// Objective value of every accepted iterate, starting point first.
    pub history: Vec<f64>,
}

impl InferenceResult {
    pub fn support(&self) -> Vec<usize> {
        threshold_support(&self.theta_hat, 0.0)
    }
}

fn upper_bound(model: &CascadeModel) -> Option<f64> {
    (model.kind == ModelKind::Voter).then_some(1.0)
}

fn into_result(outcome: solver::ProxOutcome, n: usize) -> InferenceResult {
    InferenceResult {
        theta_hat: outcome.theta,
        iterations: outcome.iterations,
        objective: outcome.objective,
        converged: outcome.converged,
        n,
        history: outcome.history,
    }
}

/// ℓ1-regularized MLE started from `start`.
pub fn solve_sparse_mle_from(
    set: &MeasurementSet,
    model: &CascadeModel,
    config: &SolverConfig,
    start: &[f64],
) -> Result<InferenceResult, RecoveryError> {
    if set.is_empty() {
        return Err(RecoveryError::EmptyMeasurements { node: set.target });
    }
    let loss = objective::NegLogLikelihood::new(set, model, config.eps_clamp);
    let outcome = solver::proximal_gradient(&loss, config.lambda, upper_bound(model), config, start)?;
    Ok(into_result(outcome, set.len()))
}

/// ℓ1-regularized MLE: minimizes the negative log-likelihood plus
/// `config.lambda · ‖θ‖₁` over the model's domain.
pub fn solve_sparse_mle(
    set: &MeasurementSet,
    model: &CascadeModel,
    config: &SolverConfig,
) -> Result<InferenceResult, RecoveryError> {
    if set.is_empty() {
        return Err(RecoveryError::EmptyMeasurements { node: set.target });
    }
    let loss = objective::NegLogLikelihood::new(set, model, config.eps_clamp);
    let start = solver::default_start(&loss, upper_bound(model));
    let outcome = solver::proximal_gradient(&loss, config.lambda, upper_bound(model), config, &start)?;
    Ok(into_result(outcome, set.len()))
}

/// Unpenalized MLE (`λ = 0`).
pub fn solve_mle(
    set: &MeasurementSet,
    model: &CascadeModel,
    config: &SolverConfig,
) -> Result<InferenceResult, RecoveryError> {
    let config = SolverConfig {
        lambda: 0.0,
        ..config.clone()
    };
    solve_sparse_mle(set, model, &config)
}

/// Squared-loss lasso `(1/n) Σ (f(<θ, x_t>) - y_t)² + λ ‖θ‖₁` over the
/// model's domain.
pub fn solve_lasso(
    set: &MeasurementSet,
    model: &CascadeModel,
    config: &SolverConfig,
) -> Result<InferenceResult, RecoveryError> {
    if set.is_empty() {
        return Err(RecoveryError::EmptyMeasurements { node: set.target });
    }
    let loss = objective::SquaredLoss::new(set, model);
    let start = vec![0.0; set.num_nodes];
    let outcome = solver::proximal_gradient(&loss, config.lambda, upper_bound(model), config, &start)?;
    Ok(into_result(outcome, set.len()))
}

/// Regularization weight `2 sqrt(log m / (α n^{1-δ}))`.
pub fn select_lambda(m: usize, n: usize, alpha: f64, delta: f64) -> Result<f64, RecoveryError> {
    if m < 2 {
        return Err(RecoveryError::Parameter(format!("need m >= 2, got {m}")));
    }
    if n == 0 {
        return Err(RecoveryError::Parameter("need n >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RecoveryError::Parameter(format!("alpha {alpha} outside (0, 1)")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(RecoveryError::Parameter(format!("delta {delta} outside [0, 1)")));
    }
    let denom = alpha * (n as f64).powf(1.0 - delta);
    Ok(2.0 * ((m as f64).ln() / denom).sqrt())
}

/// Indices `j` with `theta[j] > eta`.
pub fn threshold_support(theta: &[f64], eta: f64) -> Vec<usize> {
    theta
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v > eta)
        .map(|(j, _)| j)
        .collect()
}

/// Regularity constant α from weight bounds, given as GLC weights Θ.
///
/// * IC: `α = min p = 1 - e^{-Θ_min}`.
/// * voter: `α = min(Θ_min, 1 - Θ_max)`.
/// * CICE: `α = min((e^{εΘ_min} - 1) / ε, 1 / ε)`.
///
/// The logistic link satisfies the bound with α = 1, which leaves the
/// theorem rule without a usable constant; pass λ explicitly there.
pub fn alpha_from_bounds(model: &CascadeModel, min_weight: f64, max_weight: f64) -> Result<f64, RecoveryError> {
    if !(min_weight > 0.0 && min_weight <= max_weight) {
        return Err(RecoveryError::Parameter(format!(
            "weight bounds [{min_weight}, {max_weight}] must be positive and ordered"
        )));
    }
    let alpha = match model.kind {
        ModelKind::Ic => theta_to_p(min_weight),
        ModelKind::Voter => min_weight.min(1.0 - max_weight),
        ModelKind::Cice => {
            let eps = model.epsilon;
            ((eps * min_weight).exp_m1() / eps).min(1.0 / eps)
        }
        ModelKind::Logistic => {
            return Err(RecoveryError::Parameter(
                "the logistic link has no informative alpha; set lambda explicitly".into(),
            ))
        }
    };
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RecoveryError::Parameter(format!(
            "weight bounds give alpha = {alpha}, outside (0, 1)"
        )));
    }
    Ok(alpha)
}

/// Regularity constant α of a known graph's weights.
pub fn estimate_alpha(graph: &Graph, model: &CascadeModel) -> Result<f64, RecoveryError> {
    let (lo, hi) = graph
        .edges()
        .map(|(_, _, w)| w)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), w| (lo.min(w), hi.max(w)));
    if graph.num_edges() == 0 {
        return Err(RecoveryError::Parameter("graph has no edges".into()));
    }
    alpha_from_bounds(model, lo, hi)
}
