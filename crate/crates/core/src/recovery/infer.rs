//! Whole-graph inference: one independent estimate per node, then
//! thresholding.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    select_lambda, solve_greedy, solve_lasso, solve_mle, solve_sparse_mle, threshold_support,
    GreedyConfig, InferenceResult, RecoveryError, SolverConfig,
};
use crate::cascade::{pool_measurements, CascadeModel, CascadeTrace, MeasurementSet};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    SparseMle,
    Mle,
    Greedy,
    Lasso,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::SparseMle, Estimator::Mle, Estimator::Greedy, Estimator::Lasso];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::SparseMle => "sparse-mle",
            Estimator::Mle => "mle",
            Estimator::Greedy => "greedy",
            Estimator::Lasso => "lasso",
        }
    }

    /// Whether the estimator uses the ℓ1 weight λ.
    pub fn is_penalized(self) -> bool {
        matches!(self, Estimator::SparseMle | Estimator::Lasso)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = RecoveryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "sparse-mle" => Ok(Estimator::SparseMle),
            "mle" => Ok(Estimator::Mle),
            "greedy" => Ok(Estimator::Greedy),
            "lasso" => Ok(Estimator::Lasso),
            other => Err(RecoveryError::Parameter(format!(
                "unknown estimator '{other}' (expected sparse-mle, mle, greedy or lasso)"
            ))),
        }
    }
}

/// How λ is chosen for each node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    Fixed(f64),
    /// `scale · select_lambda(m, n_i, alpha, delta)` with `n_i` the node's
    /// own measurement count.
    Theorem { alpha: f64, delta: f64, scale: f64 },
}

impl LambdaRule {
    pub fn lambda(&self, m: usize, n: usize) -> Result<f64, RecoveryError> {
        match *self {
            LambdaRule::Fixed(l) if l.is_finite() && l >= 0.0 => Ok(l),
            LambdaRule::Fixed(l) => Err(RecoveryError::Parameter(format!("lambda {l} must be nonnegative"))),
            LambdaRule::Theorem { alpha, delta, scale } => {
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(RecoveryError::Parameter(format!("lambda scale {scale} must be positive")));
                }
                Ok(scale * select_lambda(m, n, alpha, delta)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceSettings {
    pub estimator: Estimator,
    pub lambda: LambdaRule,
    pub eta: f64,
    pub solver: SolverConfig,
    pub greedy: GreedyConfig,
}

impl Default for InferenceSettings {
    fn default() -> Self {
        Self {
            estimator: Estimator::SparseMle,
            lambda: LambdaRule::Fixed(0.0),
            eta: 0.1,
            solver: SolverConfig::default(),
            greedy: GreedyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Solved,
    Skipped,
    Failed,
}

/// Per-node outcome, serialized as one sidecar JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeReport {
    pub node: usize,
    pub n: usize,
    pub lambda: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: Option<f64>,
    pub status: NodeStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferredGraph {
    /// Edges `(i, j)` with `θ̂_{i,j} > η`, weighted by `θ̂_{i,j}`.
    pub estimate: Graph,
    /// `theta_hat[j]` is the estimated incoming-weight column of node `j`
    /// (zero for skipped or failed nodes).
    pub theta_hat: Vec<Vec<f64>>,
    pub reports: Vec<NodeReport>,
}

impl InferredGraph {
    pub fn skipped(&self) -> impl Iterator<Item = &NodeReport> {
        self.reports.iter().filter(|r| r.status != NodeStatus::Solved)
    }

    pub fn total_measurements(&self) -> usize {
        self.reports.iter().map(|r| r.n).sum()
    }

    pub fn write_sidecar<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for report in &self.reports {
            let line = serde_json::to_string(report).map_err(std::io::Error::other)?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Fits one node's measurement set with the configured estimator.
pub fn solve_node(
    set: &MeasurementSet,
    model: &CascadeModel,
    settings: &InferenceSettings,
) -> Result<(InferenceResult, Option<f64>), RecoveryError> {
    if set.is_empty() {
        return Err(RecoveryError::EmptyMeasurements { node: set.target });
    }
    let lambda = if settings.estimator.is_penalized() {
        Some(settings.lambda.lambda(set.num_nodes, set.len())?)
    } else {
        None
    };
    let config = SolverConfig {
        lambda: lambda.unwrap_or(0.0),
        ..settings.solver.clone()
    };
    let result = match settings.estimator {
        Estimator::SparseMle => solve_sparse_mle(set, model, &config)?,
        Estimator::Mle => solve_mle(set, model, &config)?,
        Estimator::Lasso => solve_lasso(set, model, &config)?,
        Estimator::Greedy => solve_greedy(set, model, &settings.greedy)?,
    };
    Ok((result, lambda))
}

/// Estimates every column of Θ from `traces` and thresholds at
/// `settings.eta`. Nodes without measurements or whose solve fails are
/// reported and left without incoming edges.
pub fn infer_graph(
    num_nodes: usize,
    traces: &[CascadeTrace],
    model: &CascadeModel,
    settings: &InferenceSettings,
) -> Result<InferredGraph, RecoveryError> {
    if !(settings.eta >= 0.0) {
        return Err(RecoveryError::Parameter(format!("eta {} must be nonnegative", settings.eta)));
    }
    model
        .validate()
        .map_err(|e| RecoveryError::Parameter(e.to_string()))?;
    if let Some(t) = traces.iter().find(|t| t.kind != model.kind) {
        return Err(RecoveryError::Parameter(format!(
            "traces were generated by the {} model, inference requested for {}",
            t.kind, model.kind
        )));
    }
    settings.solver.validate()?;

    let solved: Vec<(Vec<f64>, NodeReport)> = (0..num_nodes)
        .into_par_iter()
        .map(|node| {
            let mut report = NodeReport {
                node,
                n: 0,
                lambda: None,
                iterations: 0,
                converged: false,
                objective: None,
                status: NodeStatus::Skipped,
                message: None,
            };
            let set = match pool_measurements(traces, node, num_nodes) {
                Ok(set) => set,
                Err(e) => {
                    report.status = NodeStatus::Failed;
                    report.message = Some(e.to_string());
                    return (vec![0.0; num_nodes], report);
                }
            };
            report.n = set.len();
            match solve_node(&set, model, settings) {
                Ok((result, lambda)) => {
                    report.lambda = lambda;
                    report.iterations = result.iterations;
                    report.converged = result.converged;
                    report.objective = Some(result.objective);
                    report.status = NodeStatus::Solved;
                    (result.theta_hat, report)
                }
                Err(RecoveryError::EmptyMeasurements { .. }) => {
                    report.message = Some("no measurements".into());
                    (vec![0.0; num_nodes], report)
                }
                Err(e) => {
                    report.status = NodeStatus::Failed;
                    report.message = Some(e.to_string());
                    (vec![0.0; num_nodes], report)
                }
            }
        })
        .collect();

    let (theta_hat, reports): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
    let edges = theta_hat.iter().enumerate().flat_map(|(dst, col)| {
        threshold_support(col, settings.eta)
            .into_iter()
            .filter(move |&src| src != dst)
            .map(move |src| (src, dst, col[src]))
    });
    let estimate = Graph::from_weighted_edges(num_nodes, model.kind, edges.collect::<Vec<_>>())
        .map_err(|e| RecoveryError::Parameter(e.to_string()))?;
    Ok(InferredGraph {
        estimate,
        theta_hat,
        reports,
    })
}
