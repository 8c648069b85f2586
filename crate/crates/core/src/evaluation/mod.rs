//! Edge-recovery metrics, λ sweeps and factorial experiments.

mod config;
mod experiment;
mod metrics;
mod plot;

use thiserror::Error;

use crate::cascade::{CascadeError, CascadeModel, CascadeTrace};
use crate::graph::GraphError;
use crate::recovery::{infer_graph, InferenceSettings, LambdaRule, RecoveryError};

pub use config::{ExperimentConfig, GraphKind, GraphSpec, LambdaSpec};
pub use experiment::{run_experiment, write_csv, MetricRow, CSV_HEADER};
pub use metrics::{l2_error, precision_recall_f1, EdgeMetrics, EdgeSet, L2Error};
pub use plot::{emit_plot, PlotArtifact, PlotKind};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("config key '{key}': {message}")]
    Config { key: String, message: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("nothing to plot: {0}")]
    EmptyData(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub lambda: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision and recall of the thresholded sparse estimate at each λ of
/// `lambdas`, sorted by decreasing λ. `base` supplies the estimator,
/// threshold and solver settings; its λ rule is replaced.
pub fn pr_curve(
    num_nodes: usize,
    traces: &[CascadeTrace],
    model: &CascadeModel,
    truth: &EdgeSet,
    lambdas: &[f64],
    base: &InferenceSettings,
) -> Result<Vec<PrPoint>, EvaluationError> {
    if lambdas.is_empty() {
        return Err(EvaluationError::Parameter("lambda grid is empty".into()));
    }
    let mut grid = lambdas.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut out = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for lambda in grid {
        let settings = InferenceSettings {
            lambda: LambdaRule::Fixed(lambda),
            ..base.clone()
        };
        match infer_graph(num_nodes, traces, model, &settings) {
            Ok(inferred) => {
                let m = precision_recall_f1(&inferred.estimate.edge_set(), truth);
                out.push(PrPoint {
                    lambda,
                    precision: m.precision,
                    recall: m.recall,
                });
            }
            Err(e) => failures.push(format!("lambda {lambda}: {e}")),
        }
    }
    if !failures.is_empty() {
        return Err(EvaluationError::Parameter(failures.join("; ")));
    }
    Ok(out)
}
