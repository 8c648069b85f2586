//! Experiment configuration files.
//!
//! Plain text, one `key = value` per line, grouped into `[section]`s.
//! `#` starts a comment. Lists are comma separated. Unknown sections or
//! keys, duplicates and malformed values are errors naming the offending
//! `section.key`.
//!
//! ```text
//! [experiment]
//! name = ws_desk
//! seed = 7
//! seeds = 3
//! timing = true
//!
//! [graph]
//! kind = ws              # ws | ba | holme-kim | kronecker
//! nodes = 300
//! edges_target = 4500
//! beta = 0.1
//! weight_low = 0.2
//! weight_high = 0.7
//!
//! [model]
//! kind = ic
//!
//! [cascades]
//! n_list = 100, 500, 1000
//! p_init = 0.05
//!
//! [inference]
//! estimators = sparse-mle, mle, greedy, lasso
//! eta = 0.1
//! lambda_rule = theorem  # theorem | fixed | sweep
//! delta = 0
//!
//! [output]
//! plots = f1_vs_n, l2_vs_n
//! ```
//!
//! Section keys:
//!
//! * `experiment`: `name`, `seed`, `seeds` (per cell, default 1), `timing`
//!   (default true; false writes 0 wall times).
//! * `graph`: `kind`, `name`, `nodes`, `edges_target`, `neighbors` (ws ring
//!   degree), `attachment` (ba / holme-kim), `beta` (default 0.1),
//!   `p_triad` (default 0.5), `power`, `initiator` (four entries, row
//!   major), `weight_low`, `weight_high`, `weak_edge_prob` (default 0),
//!   `weak_low` (default 0), `weak_high` (default 0.1).
//! * `model`: `kind`, `epsilon`, `threshold`, `horizon`.
//! * `cascades`: `n_list`, `p_init` (one value or a list).
//! * `inference`: `estimators`, `eta` (default 0.1), `lambda_rule`
//!   (default theorem), `lambda` (fixed rule), `lambda_grid` (sweep rule),
//!   `alpha` (theorem rule; derived from the true weights when absent),
//!   `delta` (default 0), `lambda_scale` (theorem rule multiplier, default
//!   1), `tolerance`, `max_iterations`, `max_parents`.
//! * `output`: `plots`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::plot::PlotKind;
use super::EvaluationError;
use crate::cascade::{CascadeModel, ModelKind};
use crate::graph::{
    add_weak_edges, assign_weights, ba_attachment_for_edges, generate_barabasi_albert, generate_holme_kim,
    generate_kronecker, generate_watts_strogatz, ws_neighbors_for_edges, Graph, GraphError, GraphTopology,
    KRONECKER_DEFAULT_INITIATOR,
};
use crate::recovery::{Estimator, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    BarabasiAlbert,
    WattsStrogatz,
    HolmeKim,
    Kronecker,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::BarabasiAlbert => "ba",
            GraphKind::WattsStrogatz => "ws",
            GraphKind::HolmeKim => "holme-kim",
            GraphKind::Kronecker => "kronecker",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ba" | "barabasi-albert" => Ok(GraphKind::BarabasiAlbert),
            "ws" | "watts-strogatz" => Ok(GraphKind::WattsStrogatz),
            "hk" | "holme-kim" => Ok(GraphKind::HolmeKim),
            "kronecker" => Ok(GraphKind::Kronecker),
            other => Err(format!(
                "unknown graph kind '{other}' (expected ba, ws, holme-kim or kronecker)"
            )),
        }
    }
}

/// Generator, size and weight range of a synthetic graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub nodes: usize,
    /// Directed edge target; used to derive the generator's degree
    /// parameter when it is not given and as the Kronecker edge count.
    pub edges_target: Option<usize>,
    pub neighbors: Option<usize>,
    pub attachment: Option<usize>,
    pub beta: f64,
    pub p_triad: f64,
    pub power: Option<u32>,
    pub initiator: [[f64; 2]; 2],
    pub weight_low: f64,
    pub weight_high: f64,
    pub weak_edge_prob: f64,
    pub weak_low: f64,
    pub weak_high: f64,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, nodes: usize, edges_target: Option<usize>) -> Self {
        Self {
            kind,
            nodes,
            edges_target,
            neighbors: None,
            attachment: None,
            beta: 0.1,
            p_triad: 0.5,
            power: None,
            initiator: KRONECKER_DEFAULT_INITIATOR,
            weight_low: 0.2,
            weight_high: 0.7,
            weak_edge_prob: 0.0,
            weak_low: 0.0,
            weak_high: 0.1,
        }
    }

    fn attachment_count(&self) -> Result<usize, GraphError> {
        match (self.attachment, self.edges_target) {
            (Some(k), _) => Ok(k),
            (None, Some(target)) => ba_attachment_for_edges(self.nodes, target),
            (None, None) => Err(GraphError::Parameter("need attachment or edges_target".into())),
        }
    }

    pub fn topology(&self, seed: u64) -> Result<GraphTopology, GraphError> {
        match self.kind {
            GraphKind::BarabasiAlbert => generate_barabasi_albert(self.nodes, self.attachment_count()?, seed),
            GraphKind::HolmeKim => generate_holme_kim(self.nodes, self.attachment_count()?, self.p_triad, seed),
            GraphKind::WattsStrogatz => {
                let k = match (self.neighbors, self.edges_target) {
                    (Some(k), _) => k,
                    (None, Some(target)) => ws_neighbors_for_edges(self.nodes, target)?,
                    (None, None) => return Err(GraphError::Parameter("need neighbors or edges_target".into())),
                };
                generate_watts_strogatz(self.nodes, k, self.beta, seed)
            }
            GraphKind::Kronecker => {
                let power = match self.power {
                    Some(p) => p,
                    None if self.nodes.is_power_of_two() && self.nodes >= 2 => self.nodes.trailing_zeros(),
                    None => {
                        return Err(GraphError::Parameter(format!(
                            "kronecker graphs have 2^power nodes, got {}",
                            self.nodes
                        )))
                    }
                };
                let target = self
                    .edges_target
                    .ok_or_else(|| GraphError::Parameter("kronecker needs edges_target".into()))?;
                generate_kronecker(self.initiator, power, target, seed)
            }
        }
    }

    /// Weighted graph: topology from `topology_seed`, weights from
    /// `weight_seed`, optional weak edges from `weak_seed`.
    pub fn build(
        &self,
        model: ModelKind,
        topology_seed: u64,
        weight_seed: u64,
        weak_seed: u64,
    ) -> Result<Graph, GraphError> {
        let topology = self.topology(topology_seed)?;
        let graph = assign_weights(&topology, model, self.weight_low, self.weight_high, weight_seed)?;
        if self.weak_edge_prob > 0.0 {
            add_weak_edges(&graph, self.weak_edge_prob, self.weak_low, self.weak_high, weak_seed)
        } else {
            Ok(graph)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSpec {
    /// `scale · select_lambda` per node; `alpha = None` derives α from the
    /// true weights of each sampled graph.
    Theorem { alpha: Option<f64>, delta: f64, scale: f64 },
    Fixed(f64),
    /// One run per λ for the penalized estimators.
    Sweep(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub seeds: usize,
    pub timing: bool,
    pub graph_name: String,
    pub graph: GraphSpec,
    pub model: CascadeModel,
    pub n_list: Vec<usize>,
    pub p_init: Vec<f64>,
    pub estimators: Vec<Estimator>,
    pub eta: f64,
    pub lambda: LambdaSpec,
    pub solver: SolverConfig,
    pub max_parents: usize,
    pub plots: Vec<PlotKind>,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("experiment", &["name", "seed", "seeds", "timing"]),
    (
        "graph",
        &[
            "kind", "name", "nodes", "edges_target", "neighbors", "attachment", "beta", "p_triad", "power",
            "initiator", "weight_low", "weight_high", "weak_edge_prob", "weak_low", "weak_high",
        ],
    ),
    ("model", &["kind", "epsilon", "threshold", "horizon"]),
    ("cascades", &["n_list", "p_init"]),
    (
        "inference",
        &[
            "estimators", "eta", "lambda_rule", "lambda", "lambda_grid", "alpha", "delta", "lambda_scale", "tolerance",
            "max_iterations", "max_parents",
        ],
    ),
    ("output", &["plots"]),
];

struct Entries {
    values: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, EvaluationError> {
        let mut values = BTreeMap::new();
        let mut section: Option<&str> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                match SCHEMA.iter().find(|(s, _)| *s == name) {
                    Some((s, _)) => section = Some(s),
                    None => {
                        return Err(EvaluationError::Config {
                            key: name.to_string(),
                            message: format!("unknown section on line {line_no}"),
                        })
                    }
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(EvaluationError::Config {
                    key: line.to_string(),
                    message: format!("expected key = value on line {line_no}"),
                });
            };
            let key = key.trim();
            let Some(sec) = section else {
                return Err(EvaluationError::Config {
                    key: key.to_string(),
                    message: format!("key outside any section on line {line_no}"),
                });
            };
            let full = format!("{sec}.{key}");
            let known = SCHEMA.iter().any(|(s, keys)| *s == sec && keys.contains(&key));
            if !known {
                return Err(EvaluationError::Config {
                    key: full,
                    message: format!("unknown key on line {line_no}"),
                });
            }
            if values.contains_key(&full) {
                return Err(EvaluationError::Config {
                    key: full,
                    message: format!("duplicate key on line {line_no}"),
                });
            }
            values.insert(full, (line_no, value.trim().to_string()));
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, EvaluationError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| EvaluationError::Config {
                key: key.to_string(),
                message: format!("invalid value '{v}' on line {line}: {e}"),
            }),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, EvaluationError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| EvaluationError::Config {
            key: key.to_string(),
            message: "missing required key".into(),
        })
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, EvaluationError>
    where
        T::Err: fmt::Display,
    {
        let Some((line, v)) = self.values.get(key) else {
            return Ok(None);
        };
        let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(EvaluationError::Config {
                key: key.to_string(),
                message: format!("empty list on line {line}"),
            });
        }
        items
            .into_iter()
            .map(|item| {
                item.parse::<T>().map_err(|e| EvaluationError::Config {
                    key: key.to_string(),
                    message: format!("invalid list entry '{item}' on line {line}: {e}"),
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

fn config_error(key: &str, message: impl Into<String>) -> EvaluationError {
    EvaluationError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, EvaluationError> {
        let e = Entries::parse(text)?;

        let name: String = e.require("experiment.name")?;
        if name.is_empty() || name.contains(['/', '\\', ',']) {
            return Err(config_error("experiment.name", "must be nonempty without '/', '\\' or ','"));
        }
        let seed: u64 = e.require("experiment.seed")?;
        let seeds: usize = e.get("experiment.seeds")?.unwrap_or(1);
        if seeds == 0 {
            return Err(config_error("experiment.seeds", "must be at least 1"));
        }
        let timing: bool = e.get("experiment.timing")?.unwrap_or(true);

        let kind = e
            .raw("graph.kind")
            .ok_or_else(|| config_error("graph.kind", "missing required key"))?
            .parse::<GraphKind>()
            .map_err(|msg| config_error("graph.kind", msg))?;
        let nodes: usize = e.require("graph.nodes")?;
        let mut graph = GraphSpec::new(kind, nodes, e.get("graph.edges_target")?);
        graph.neighbors = e.get("graph.neighbors")?;
        graph.attachment = e.get("graph.attachment")?;
        if let Some(beta) = e.get("graph.beta")? {
            graph.beta = beta;
        }
        if let Some(p) = e.get("graph.p_triad")? {
            graph.p_triad = p;
        }
        graph.power = e.get("graph.power")?;
        if let Some(init) = e.list::<f64>("graph.initiator")? {
            if init.len() != 4 {
                return Err(config_error("graph.initiator", "needs exactly four entries"));
            }
            graph.initiator = [[init[0], init[1]], [init[2], init[3]]];
        }
        graph.weight_low = e.require("graph.weight_low")?;
        graph.weight_high = e.require("graph.weight_high")?;
        if let Some(p) = e.get("graph.weak_edge_prob")? {
            graph.weak_edge_prob = p;
        }
        if let Some(v) = e.get("graph.weak_low")? {
            graph.weak_low = v;
        }
        if let Some(v) = e.get("graph.weak_high")? {
            graph.weak_high = v;
        }
        if !(0.0..=1.0).contains(&graph.weak_edge_prob) {
            return Err(config_error("graph.weak_edge_prob", "must lie in [0, 1]"));
        }
        let graph_name = e
            .get::<String>("graph.name")?
            .unwrap_or_else(|| format!("{}{}", kind.as_str(), nodes));
        if graph_name.contains(['/', '\\', ',', '@']) {
            return Err(config_error("graph.name", "must not contain '/', '\\', ',' or '@'"));
        }

        let model_kind = e
            .raw("model.kind")
            .ok_or_else(|| config_error("model.kind", "missing required key"))?
            .parse::<ModelKind>()
            .map_err(|err| config_error("model.kind", err.to_string()))?;
        let mut model = CascadeModel::of_kind(model_kind);
        if let Some(eps) = e.get("model.epsilon")? {
            model.epsilon = eps;
        }
        if let Some(t) = e.get("model.threshold")? {
            model.threshold = t;
        }
        if let Some(h) = e.get::<usize>("model.horizon")? {
            model.horizon = Some(h);
        }
        model
            .validate()
            .map_err(|err| config_error("model", err.to_string()))?;

        let n_list: Vec<usize> = e
            .list("cascades.n_list")?
            .ok_or_else(|| config_error("cascades.n_list", "missing required key"))?;
        if n_list.contains(&0) {
            return Err(config_error("cascades.n_list", "cascade counts must be positive"));
        }
        let p_init: Vec<f64> = e
            .list("cascades.p_init")?
            .ok_or_else(|| config_error("cascades.p_init", "missing required key"))?;
        if p_init.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(config_error("cascades.p_init", "values must lie in (0, 1]"));
        }

        let estimators: Vec<Estimator> = match e.raw("inference.estimators") {
            None => vec![Estimator::SparseMle],
            Some(_) => {
                let names: Vec<String> = e.list("inference.estimators")?.expect("present");
                names
                    .iter()
                    .map(|n| n.parse::<Estimator>())
                    .collect::<Result<_, _>>()
                    .map_err(|err| config_error("inference.estimators", err.to_string()))?
            }
        };
        let eta: f64 = e.get("inference.eta")?.unwrap_or(0.1);
        if !(eta >= 0.0) {
            return Err(config_error("inference.eta", "must be nonnegative"));
        }
        let rule: String = e.get("inference.lambda_rule")?.unwrap_or_else(|| "theorem".into());
        let lambda = match rule.as_str() {
            "theorem" => {
                let alpha: Option<f64> = e.get("inference.alpha")?;
                if alpha.is_some_and(|a| !(a > 0.0 && a < 1.0)) {
                    return Err(config_error("inference.alpha", "must lie in (0, 1)"));
                }
                let delta: f64 = e.get("inference.delta")?.unwrap_or(0.0);
                if !(0.0..1.0).contains(&delta) {
                    return Err(config_error("inference.delta", "must lie in [0, 1)"));
                }
                if alpha.is_none() && model_kind == ModelKind::Logistic {
                    return Err(config_error(
                        "inference.alpha",
                        "the logistic model needs an explicit alpha or a fixed lambda",
                    ));
                }
                let scale: f64 = e.get("inference.lambda_scale")?.unwrap_or(1.0);
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(config_error("inference.lambda_scale", "must be positive"));
                }
                LambdaSpec::Theorem { alpha, delta, scale }
            }
            "fixed" => {
                let l: f64 = e.require("inference.lambda")?;
                if !(l >= 0.0 && l.is_finite()) {
                    return Err(config_error("inference.lambda", "must be nonnegative"));
                }
                LambdaSpec::Fixed(l)
            }
            "sweep" => {
                let grid: Vec<f64> = e
                    .list("inference.lambda_grid")?
                    .ok_or_else(|| config_error("inference.lambda_grid", "missing required key"))?;
                if grid.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
                    return Err(config_error("inference.lambda_grid", "values must be nonnegative"));
                }
                LambdaSpec::Sweep(grid)
            }
            other => {
                return Err(config_error(
                    "inference.lambda_rule",
                    format!("unknown rule '{other}' (expected theorem, fixed or sweep)"),
                ))
            }
        };
        let mut solver = SolverConfig::default();
        if let Some(t) = e.get("inference.tolerance")? {
            solver.tolerance = t;
        }
        if let Some(it) = e.get("inference.max_iterations")? {
            solver.max_iterations = it;
        }
        solver
            .validate()
            .map_err(|err| config_error("inference", err.to_string()))?;
        let max_parents: usize = e.get("inference.max_parents")?.unwrap_or(usize::MAX);

        let plots: Vec<PlotKind> = match e.raw("output.plots") {
            None => Vec::new(),
            Some(_) => {
                let names: Vec<String> = e.list("output.plots")?.expect("present");
                names
                    .iter()
                    .map(|n| n.parse::<PlotKind>())
                    .collect::<Result<_, _>>()
                    .map_err(|err| config_error("output.plots", err.to_string()))?
            }
        };

        Ok(Self {
            name,
            seed,
            seeds,
            timing,
            graph_name,
            graph,
            model,
            n_list,
            p_init,
            estimators,
            eta,
            lambda,
            solver,
            max_parents,
            plots,
        })
    }
}
