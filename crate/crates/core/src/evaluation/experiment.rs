use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, LambdaSpec};
use super::metrics::{l2_error, precision_recall_f1};
use super::EvaluationError;
use crate::cascade::batch_simulate;
use crate::recovery::{estimate_alpha, infer_graph, Estimator, GreedyConfig, InferenceSettings, LambdaRule};
use crate::seed;

pub const CSV_HEADER: &str =
    "graph,estimator,n_cascades,n_measurements_total,seed,precision,recall,f1,l2_error,wall_time_ms";

/// One (graph, estimator, n, seed) cell of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    /// Graph label, suffixed `@p_init=<v>` when several source
    /// probabilities are compared.
    pub graph: String,
    /// Estimator label, suffixed `@lambda=<v>` in λ sweeps.
    pub estimator: String,
    pub n_cascades: usize,
    pub n_measurements_total: usize,
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub l2_error: f64,
    pub wall_time_ms: f64,
    pub p_init: f64,
    pub lambda: Option<f64>,
    pub error: Option<String>,
}

fn fmt_metric(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "nan".into()
    }
}

pub fn write_csv<W: Write>(rows: &[MetricRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.3}",
            r.graph,
            r.estimator,
            r.n_cascades,
            r.n_measurements_total,
            r.seed,
            fmt_metric(r.precision),
            fmt_metric(r.recall),
            fmt_metric(r.f1),
            fmt_metric(r.l2_error),
            r.wall_time_ms
        )?;
    }
    Ok(())
}

/// Estimator runs of one cell: the estimator, its label and λ rule.
fn variants(config: &ExperimentConfig, alpha: Option<f64>) -> Vec<(Estimator, String, LambdaRule, Option<f64>)> {
    let mut out = Vec::new();
    for &est in &config.estimators {
        match (&config.lambda, est.is_penalized()) {
            (LambdaSpec::Sweep(grid), true) => {
                for &l in grid {
                    out.push((est, format!("{est}@lambda={l}"), LambdaRule::Fixed(l), Some(l)));
                }
            }
            (LambdaSpec::Fixed(l), _) => out.push((est, est.to_string(), LambdaRule::Fixed(*l), None)),
            (LambdaSpec::Theorem { delta, scale, .. }, true) => out.push((
                est,
                est.to_string(),
                LambdaRule::Theorem {
                    alpha: alpha.unwrap_or(f64::NAN),
                    delta: *delta,
                    scale: *scale,
                },
                None,
            )),
            _ => out.push((est, est.to_string(), LambdaRule::Fixed(0.0), None)),
        }
    }
    out
}

fn failed_row(graph: &str, estimator: String, n: usize, seed: u64, p_init: f64, lambda: Option<f64>, error: String) -> MetricRow {
    MetricRow {
        graph: graph.to_string(),
        estimator,
        n_cascades: n,
        n_measurements_total: 0,
        seed,
        precision: f64::NAN,
        recall: f64::NAN,
        f1: f64::NAN,
        l2_error: f64::NAN,
        wall_time_ms: 0.0,
        p_init,
        lambda,
        error: Some(error),
    }
}

fn run_cell(config: &ExperimentConfig, p_index: usize, seed_index: usize) -> Vec<MetricRow> {
    let p_init = config.p_init[p_index];
    let graph_label = if config.p_init.len() > 1 {
        format!("{}@p_init={p_init}", config.graph_name)
    } else {
        config.graph_name.clone()
    };
    let s = seed_index as u64;
    let master = config.seed;
    let n_max = *config.n_list.iter().max().expect("validated nonempty");

    let built = (|| -> Result<_, EvaluationError> {
        let mut strong_spec = config.graph.clone();
        strong_spec.weak_edge_prob = 0.0;
        let topology_seed = seed::derive(master, &[seed::tag::TOPOLOGY]);
        let weight_seed = seed::derive(master, &[seed::tag::WEIGHTS, s]);
        let strong = strong_spec.build(config.model.kind, topology_seed, weight_seed, 0)?;
        let graph = config.graph.build(
            config.model.kind,
            topology_seed,
            weight_seed,
            seed::derive(master, &[seed::tag::WEAK_EDGES, s]),
        )?;
        let alpha = match config.lambda {
            LambdaSpec::Theorem { alpha: Some(a), .. } => Some(a),
            LambdaSpec::Theorem { alpha: None, .. } => Some(estimate_alpha(&strong, &config.model)?),
            _ => None,
        };
        let traces = batch_simulate(
            &graph,
            &config.model,
            n_max,
            p_init,
            seed::derive(master, &[seed::tag::CASCADES, p_index as u64, s]),
        )?;
        Ok((strong, graph, alpha, traces))
    })();

    let (strong, graph, alpha, traces) = match built {
        Ok(v) => v,
        Err(e) => {
            let mut rows = Vec::new();
            for &n in &config.n_list {
                for (_, label, _, lambda) in variants(config, None) {
                    rows.push(failed_row(&graph_label, label, n, s, p_init, lambda, e.to_string()));
                }
            }
            return rows;
        }
    };
    let truth = strong.edge_set();
    let theta_star = graph.columns();
    let m = graph.num_nodes();

    let mut rows = Vec::new();
    for &n in &config.n_list {
        for (est, label, rule, lambda) in variants(config, alpha) {
            let settings = InferenceSettings {
                estimator: est,
                lambda: rule,
                eta: config.eta,
                solver: config.solver.clone(),
                greedy: GreedyConfig {
                    max_parents: config.max_parents,
                    eps_clamp: config.solver.eps_clamp,
                    ..GreedyConfig::default()
                },
            };
            let start = Instant::now();
            let result = infer_graph(m, &traces[..n], &config.model, &settings);
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let row = match result {
                Ok(inferred) => {
                    let metrics = precision_recall_f1(&inferred.estimate.edge_set(), &truth);
                    let l2 = l2_error(&inferred.theta_hat, &theta_star).expect("same shape");
                    let failures: Vec<String> = inferred
                        .reports
                        .iter()
                        .filter(|r| r.status == crate::recovery::NodeStatus::Failed)
                        .map(|r| format!("node {}: {}", r.node, r.message.clone().unwrap_or_default()))
                        .collect();
                    MetricRow {
                        graph: graph_label.clone(),
                        estimator: label,
                        n_cascades: n,
                        n_measurements_total: inferred.total_measurements(),
                        seed: s,
                        precision: metrics.precision,
                        recall: metrics.recall,
                        f1: metrics.f1,
                        l2_error: l2.total,
                        wall_time_ms: if config.timing { elapsed } else { 0.0 },
                        p_init,
                        lambda,
                        error: (!failures.is_empty()).then(|| failures.join("; ")),
                    }
                }
                Err(e) => failed_row(&graph_label, label, n, s, p_init, lambda, e.to_string()),
            };
            rows.push(row);
        }
    }
    rows
}

/// Runs the full factorial (source probability × seed × n × estimator).
///
/// The topology is drawn once from the master seed; every seed index draws
/// fresh weights and fresh cascades. For each n the first n cascades of the
/// cell are used. Cells fail independently: a failure yields rows with NaN
/// metrics and the error message.
pub fn run_experiment(config: &ExperimentConfig) -> Vec<MetricRow> {
    let cells: Vec<(usize, usize)> = (0..config.p_init.len())
        .flat_map(|p| (0..config.seeds).map(move |s| (p, s)))
        .collect();
    let per_cell: Vec<Vec<MetricRow>> = cells.par_iter().map(|&(p, s)| run_cell(config, p, s)).collect();

    // Order: source probability, estimator variant, n, seed.
    let variant_count = variants(config, Some(0.5)).len();
    let mut keyed: Vec<((usize, usize, usize, usize), MetricRow)> = Vec::new();
    for (&(p, s), rows) in cells.iter().zip(per_cell) {
        for (k, row) in rows.into_iter().enumerate() {
            let n_index = k / variant_count;
            let v_index = k % variant_count;
            keyed.push(((p, v_index, n_index, s), row));
        }
    }
    keyed.sort_by_key(|(key, _)| *key);
    keyed.into_iter().map(|(_, row)| row).collect()
}
