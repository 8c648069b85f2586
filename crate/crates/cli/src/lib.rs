//! `glc`: generate graphs, simulate cascades, infer edge weights, run
//! experiment grids and compute diagnostics.
//!
//! Every command writes its artifacts plus a JSON manifest listing them.
//! Exit codes: 0 success, 2 usage or config error, 3 data error, 4
//! numerical failure.

mod commands;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use glc_core::cascade::{CascadeError, CascadeModel, ModelKind};
use glc_core::diagnostics::DiagnosticsError;
use glc_core::evaluation::{EvaluationError, GraphKind};
use glc_core::graph::GraphError;
use glc_core::recovery::{Estimator, RecoveryError};
use thiserror::Error;

pub use manifest::{Manifest, MANIFEST_SUFFIX};

#[derive(Debug, Parser)]
#[command(name = "glc", version, about = "Generalized linear cascades: simulation and sparse network inference")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a weighted random graph (TSV).
    Generate(GenerateArgs),
    /// Simulate cascades on a graph (JSON Lines).
    Simulate(SimulateArgs),
    /// Estimate every node's incoming weights from traces.
    Infer(InferArgs),
    /// Run an experiment grid from a config file.
    Experiment(ExperimentArgs),
    /// Restricted-eigenvalue, link-regularity and Hessian-concentration reports.
    Diagnose(DiagnoseArgs),
}

/// Link parameters shared by the commands that read traces or graphs.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Cascade model; defaults to the one recorded in the input file.
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// CICE discretization step.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Logistic threshold.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Voter horizon, or a step cap for the other models.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub kind: GraphKind,
    #[arg(long)]
    pub nodes: usize,
    /// Directed edge target (sets the degree parameter when it is not given).
    #[arg(long)]
    pub edges_target: Option<usize>,
    /// Watts-Strogatz ring degree.
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// Edges per new node (ba, holme-kim).
    #[arg(long)]
    pub attachment: Option<usize>,
    /// Watts-Strogatz rewiring probability.
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Holme-Kim triad formation probability.
    #[arg(long, default_value_t = 0.5)]
    pub p_triad: f64,
    /// Kronecker power (default: log2 of --nodes).
    #[arg(long)]
    pub power: Option<u32>,
    #[arg(long)]
    pub model: ModelKind,
    /// Lower end of the weight range (probabilities for ic).
    #[arg(long, default_value_t = 0.2)]
    pub wlow: f64,
    #[arg(long, default_value_t = 0.7)]
    pub whigh: f64,
    /// Probability of adding a weak edge on each missing pair.
    #[arg(long, default_value_t = 0.0)]
    pub weak_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    pub weak_low: f64,
    #[arg(long, default_value_t = 0.1)]
    pub weak_high: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "graph.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Number of cascades.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub p_init: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "traces.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub traces: PathBuf,
    /// Node count (default: largest id in the traces plus one).
    #[arg(long)]
    pub nodes: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "sparse-mle")]
    pub estimator: Estimator,
    /// Fixed penalty for the penalized estimators.
    #[arg(long, conflicts_with = "alpha")]
    pub lambda: Option<f64>,
    /// Theorem rule λ = 2 sqrt(ln m / (α n^(1-δ))) per node.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Multiplier on the theorem-rule λ.
    #[arg(long, default_value_t = 1.0)]
    pub lambda_scale: f64,
    /// Edges are kept when the estimated weight exceeds eta.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Parent cap for the greedy estimator.
    #[arg(long)]
    pub max_parents: Option<usize>,
    #[arg(long, default_value = "estimate.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: results/<experiment name>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write 0 for every wall time so bundles are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub traces: PathBuf,
    /// Target node(s), comma separated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub node: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub re_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Measurement counts for the concentration study.
    #[arg(long, value_delimiter = ',', default_value = "250,1000,4000")]
    pub n_grid: Vec<usize>,
    /// Trials per measurement count; 0 skips the concentration study.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.05)]
    pub p_init: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Prefix of the report files.
    #[arg(long, default_value = "diagnostics")]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Parse { .. } | GraphError::Io(_) => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CascadeError> for CliError {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::Graph(g) => g.into(),
            CascadeError::Parse { .. } | CascadeError::Io(_) => CliError::Data(e.to_string()),
            CascadeError::Boundary { .. } | CascadeError::StepCap { .. } => CliError::Numerical(e.to_string()),
            CascadeError::Parameter(_) | CascadeError::Domain(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<RecoveryError> for CliError {
    fn from(e: RecoveryError) -> Self {
        match e {
            RecoveryError::Parameter(_) => CliError::Usage(e.to_string()),
            RecoveryError::EmptyMeasurements { .. } => CliError::Data(e.to_string()),
            RecoveryError::Numerical { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::Parameter(_) => CliError::Usage(e.to_string()),
            DiagnosticsError::Cascade(c) => c.into(),
            DiagnosticsError::Graph(g) => g.into(),
            DiagnosticsError::Recovery(r) => r.into(),
            DiagnosticsError::Empty | DiagnosticsError::Domain(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Graph(g) => g.into(),
            EvaluationError::Cascade(c) => c.into(),
            EvaluationError::Recovery(r) => r.into(),
            EvaluationError::EmptyData(_) => CliError::Data(e.to_string()),
            EvaluationError::Config { .. } | EvaluationError::Parameter(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl ModelArgs {
    /// Model of kind `recorded` (from the input file) with these link
    /// parameters; an explicit `--model` must agree with it.
    pub fn resolve(&self, recorded: Option<ModelKind>) -> Result<CascadeModel, CliError> {
        let kind = match (self.model, recorded) {
            (Some(flag), Some(file)) if flag != file => {
                return Err(CliError::Usage(format!(
                    "--model {flag} does not match the input file's model {file}"
                )))
            }
            (Some(kind), _) | (None, Some(kind)) => kind,
            (None, None) => return Err(CliError::Usage("--model is required (input records no model)".into())),
        };
        let mut model = CascadeModel::of_kind(kind);
        model.epsilon = self.epsilon;
        model.threshold = self.threshold;
        if self.horizon.is_some() {
            model.horizon = self.horizon;
        }
        model.validate()?;
        Ok(model)
    }
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // Fails only when a global pool already exists (repeated calls in
        // one process); the existing pool is then reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match cli.command {
        Command::Generate(args) => commands::generate(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Infer(args) => commands::infer(&args),
        Command::Experiment(args) => commands::experiment(&args),
        Command::Diagnose(args) => commands::diagnose(&args),
    }
}
