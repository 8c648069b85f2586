//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). The process exits 0 after
//! printing every line; set `ACCEPTANCE_STRICT=1` to exit 1 when any
//! criterion fails. `ACCEPTANCE_ONLY=2,5` runs a subset.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use glc_core::cascade::{batch_simulate, simulate, CascadeModel, CascadeTrace, MeasurementSet, ModelKind};
use glc_core::diagnostics::{hessian_concentration, re_estimate, ConcentrationConfig};
use glc_core::evaluation::{l2_error, pr_curve, precision_recall_f1};
use glc_core::graph::{
    add_weak_edges, assign_weights, generate_holme_kim, generate_watts_strogatz, p_to_theta, theta_to_p, Graph,
    GraphTopology,
};
use glc_core::recovery::{
    gradient, hessian, infer_graph, solve_sparse_mle, Estimator, InferenceSettings, LambdaRule,
    SolverConfig,
};
use glc_core::seed::{self, tag};
use nalgebra::DMatrix;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

const MASTER_SEED: u64 = 20_150_601;

// Desk-scale graph: Watts-Strogatz, 100 nodes, ring degree 8, IC weights
// drawn as probabilities in [0.2, 0.7].
const DESK_NODES: usize = 100;
const DESK_DEGREE: usize = 8;
const P_INIT: f64 = 0.05;
const ALPHA: f64 = 0.2;
/// Multiplier on the theorem-rule λ for the desk-scale runs.
const LAMBDA_SCALE: f64 = 0.05;

fn desk_topology() -> GraphTopology {
    generate_watts_strogatz(DESK_NODES, DESK_DEGREE, 0.1, seed::derive(MASTER_SEED, &[tag::TOPOLOGY])).unwrap()
}

fn desk_graph(topology: &GraphTopology, s: u64) -> Graph {
    assign_weights(topology, ModelKind::Ic, 0.2, 0.7, seed::derive(MASTER_SEED, &[tag::WEIGHTS, s])).unwrap()
}

fn cascades(graph: &Graph, n: usize, s: u64) -> Vec<CascadeTrace> {
    batch_simulate(graph, &CascadeModel::ic(), n, P_INIT, seed::derive(MASTER_SEED, &[tag::CASCADES, 0, s])).unwrap()
}

fn settings(estimator: Estimator) -> InferenceSettings {
    InferenceSettings {
        estimator,
        lambda: LambdaRule::Theorem {
            alpha: ALPHA,
            delta: 0.0,
            scale: LAMBDA_SCALE,
        },
        ..InferenceSettings::default()
    }
}

fn infer(graph: &Graph, traces: &[CascadeTrace], estimator: Estimator) -> (f64, Vec<f64>, f64) {
    let result = infer_graph(graph.num_nodes(), traces, &CascadeModel::ic(), &settings(estimator)).unwrap();
    let l2 = l2_error(&result.theta_hat, &graph.columns()).unwrap();
    let f1 = precision_recall_f1(&result.estimate.edge_set(), &graph.edge_set()).f1;
    (f1, l2.per_column, l2.total)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn inversions(values: &[f64], increasing: bool) -> usize {
    values
        .windows(2)
        .filter(|w| if increasing { w[1] < w[0] } else { w[1] > w[0] })
        .count()
}

// Direct-formula oracles, independent of the library's link code.

fn oracle_f(model: &CascadeModel, z: f64) -> f64 {
    match model.kind {
        ModelKind::Ic => 1.0 - (-z).exp(),
        ModelKind::Voter => z,
        ModelKind::Cice => 1.0 - (-model.epsilon * z).exp(),
        ModelKind::Logistic => 1.0 / (1.0 + (model.threshold - z).exp()),
    }
}

fn oracle_nll(model: &CascadeModel, set: &MeasurementSet, theta: &[f64]) -> f64 {
    let mut total = 0.0;
    for meas in &set.measurements {
        let z: f64 = meas.active.iter().map(|&k| theta[k]).sum();
        let f = oracle_f(model, z);
        total -= if meas.outcome { f.ln() } else { (1.0 - f).ln() };
    }
    total / set.len() as f64
}

fn four_models() -> [CascadeModel; 4] {
    [
        CascadeModel::ic(),
        CascadeModel::voter(10),
        CascadeModel::cice(0.6),
        CascadeModel::logistic(0.8),
    ]
}

fn gradient_hessian() -> Outcome {
    let h = 1e-5;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for trial in 0..100u64 {
        let model = four_models()[(trial % 4) as usize];
        let mut rng = seed::rng(seed::derive(MASTER_SEED, &[101, trial]));
        let m = rng.random_range(2..=20);
        let n = rng.random_range(1..=200);
        let theta: Vec<f64> = (0..m)
            .map(|_| match model.kind {
                ModelKind::Voter => rng.random_range(0.03..0.9) / m as f64,
                _ => rng.random_range(0.05..1.0),
            })
            .collect();
        let mut set = MeasurementSet::new(m, m + 1);
        for _ in 0..n {
            let mut active: Vec<usize> = (0..m).filter(|_| rng.random::<f64>() < 0.3).collect();
            if active.is_empty() {
                active.push(rng.random_range(0..m));
            }
            set.push(active, rng.random::<bool>());
        }
        let mut theta = theta;
        theta.push(0.0);
        let g = gradient(&theta, &set, &model).unwrap();
        let hess = hessian(&theta, &set, &model).unwrap();
        for j in 0..=m {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (oracle_nll(&model, &set, &plus) - oracle_nll(&model, &set, &minus)) / (2.0 * h);
            worst_g = worst_g.max(rel(g[j], fd));
            let gp = gradient(&plus, &set, &model).unwrap();
            let gm = gradient(&minus, &set, &model).unwrap();
            for i in 0..=m {
                worst_h = worst_h.max(rel(hess[(i, j)], (gp[i] - gm[i]) / (2.0 * h)));
            }
        }
    }
    Outcome::new(
        worst_g < 1e-6 && worst_h < 1e-5,
        format!("max rel err gradient {worst_g:.2e} (< 1e-6), hessian {worst_h:.2e} (< 1e-5)"),
    )
}

/// Exact objective of a 3-coordinate IC problem, summed over the 8 activity
/// patterns with their outcome counts.
struct PatternObjective {
    ones: [f64; 8],
    zeros: [f64; 8],
    n: f64,
    lambda: f64,
}

impl PatternObjective {
    fn value(&self, t: [f64; 3]) -> f64 {
        let mut total = 0.0;
        for p in 0..8 {
            let z: f64 = (0..3).filter(|&k| p >> k & 1 == 1).map(|k| t[k]).sum();
            if self.ones[p] > 0.0 {
                total -= self.ones[p] * (1.0 - (-z).exp()).max(1e-300).ln();
            }
            total += self.zeros[p] * z;
        }
        total / self.n + self.lambda * (t[0].abs() + t[1].abs() + t[2].abs())
    }

    /// Grid minimum at resolution `step` inside `[lo, hi]` per coordinate.
    fn grid(&self, lo: [f64; 3], hi: [f64; 3], step: f64) -> ([f64; 3], f64) {
        let count = |k: usize| ((hi[k] - lo[k]) / step).round() as i64;
        let mut best = ([0.0; 3], f64::INFINITY);
        for a in 0..=count(0) {
            for b in 0..=count(1) {
                for c in 0..=count(2) {
                    let t = [
                        lo[0] + step * a as f64,
                        lo[1] + step * b as f64,
                        lo[2] + step * c as f64,
                    ];
                    let v = self.value(t);
                    if v < best.1 {
                        best = (t, v);
                    }
                }
            }
        }
        best
    }
}

fn oracle_equivalence() -> Outcome {
    let truth = [0.5, 0.0, 1.2];
    let lambda = 0.01;
    let mut rng = seed::rng(seed::derive(MASTER_SEED, &[102]));
    let mut set = MeasurementSet::new(3, 4);
    let mut oracle = PatternObjective {
        ones: [0.0; 8],
        zeros: [0.0; 8],
        n: 2000.0,
        lambda,
    };
    for _ in 0..2000 {
        let active: Vec<usize> = (0..3).filter(|_| rng.random::<f64>() < 0.4).collect();
        let z: f64 = active.iter().map(|&k| truth[k]).sum();
        let y = rng.random::<f64>() < 1.0 - (-z).exp();
        let p: usize = active.iter().map(|&k| 1 << k).sum();
        if y {
            oracle.ones[p] += 1.0;
        } else {
            oracle.zeros[p] += 1.0;
        }
        set.push(active, y);
    }
    let config = SolverConfig {
        lambda,
        tolerance: 1e-13,
        max_iterations: 100_000,
        ..SolverConfig::default()
    };
    let fit = solve_sparse_mle(&set, &CascadeModel::ic(), &config).unwrap();

    // Coarse-to-fine over [0, 2]^3; the objective is convex, so each window
    // of ±2 coarse cells contains the finer minimizer.
    let (mut center, _) = oracle.grid([0.0; 3], [2.0; 3], 0.1);
    for step in [0.01, 0.001] {
        let lo = center.map(|c| (c - 20.0 * step).max(0.0));
        let hi = center.map(|c| (c + 20.0 * step).min(2.0));
        let lo = lo.map(|v| (v / step).round() * step);
        center = oracle.grid(lo, hi, step).0;
    }
    let grid_value = oracle.value(center);
    let theta = [fit.theta_hat[0], fit.theta_hat[1], fit.theta_hat[2]];
    let fit_value = oracle.value(theta);
    let linf = (0..3).map(|k| (theta[k] - center[k]).abs()).fold(0.0, f64::max);
    let obj_gap = (fit.objective - grid_value).abs();
    let pass = linf <= 1e-3 && obj_gap <= 1e-6 && (fit_value - fit.objective).abs() <= 1e-9 && fit.theta_hat[3] == 0.0;
    Outcome::new(
        pass,
        format!(
            "theta_hat ({:.4}, {:.4}, {:.4}) vs grid ({:.3}, {:.3}, {:.3}): linf {linf:.2e} (<= 1e-3), objective gap {obj_gap:.2e} (<= 1e-6)",
            theta[0], theta[1], theta[2], center[0], center[1], center[2]
        ),
    )
}

fn simulator_fidelity() -> Outcome {
    const TRIALS: u64 = 100_000;
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for model in [
        CascadeModel::ic(),
        CascadeModel::voter(3),
        CascadeModel::cice(0.7),
        CascadeModel::logistic(0.5),
    ] {
        // Parents 0, 1, 3 of node 2; node 3 is never a source. Isolated
        // nodes 4..20 only raise the 10-steps-per-node cap, which a CICE
        // run with a lone susceptible child can otherwise reach.
        let w = match model.kind {
            ModelKind::Voter => [0.2, 0.3, 0.5],
            ModelKind::Ic => [p_to_theta(0.25).unwrap(), p_to_theta(0.1).unwrap(), 0.4],
            _ => [0.35, 0.4, 0.9],
        };
        let g = Graph::from_weighted_edges(20, model.kind, [(0, 2, w[0]), (1, 2, w[1]), (3, 2, w[2])]).unwrap();
        for sources in [vec![0], vec![1], vec![0, 1]] {
            let z: f64 = sources.iter().map(|&s| w[s]).sum();
            let p = model.link_value(z).unwrap();
            if (p - oracle_f(&model, z)).abs() > 1e-15 {
                return Outcome::new(false, format!("{} link_value({z}) = {p}", model.kind));
            }
            let hits = (0..TRIALS)
                .filter(|&s| {
                    let trace = simulate(&g, &model, &sources, seed::derive(MASTER_SEED, &[103, s])).unwrap();
                    trace.len() > 1 && trace.is_active(1, 2)
                })
                .count() as f64;
            let sigma = (p * (1.0 - p) / TRIALS as f64).sqrt();
            let dev = (hits / TRIALS as f64 - p).abs() / sigma;
            worst = worst.max(dev);
            if dev > 3.0 {
                notes.push(format!("{} sources {sources:?}: {dev:.2} sigma", model.kind));
            }
        }
    }

    let topology = generate_holme_kim(60, 3, 0.5, seed::derive(MASTER_SEED, &[104])).unwrap();
    let g = assign_weights(&topology, ModelKind::Ic, 0.2, 0.7, seed::derive(MASTER_SEED, &[105])).unwrap();
    let traces = batch_simulate(&g, &CascadeModel::ic(), 10_000, P_INIT, seed::derive(MASTER_SEED, &[106])).unwrap();
    let mut violations = 0;
    for trace in &traces {
        let mut seen = vec![false; 60];
        let ok_sources = trace.steps.first() == Some(&trace.sources);
        let mut ok = ok_sources;
        for (t, step) in trace.steps.iter().enumerate() {
            ok &= !step.is_empty();
            for &j in step {
                ok &= !seen[j];
                seen[j] = true;
                if t > 0 {
                    ok &= g.incoming(j).iter().any(|&(src, _)| trace.steps[t - 1].contains(&src));
                }
            }
        }
        violations += usize::from(!ok);
    }
    Outcome::new(
        notes.is_empty() && violations == 0,
        format!(
            "worst frequency deviation {worst:.2} sigma (<= 3) over 12 configurations; {violations} of 10000 IC traces violate the state machine{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join(", ")) }
        ),
    )
}

fn theta_error_dominates() -> Outcome {
    let mut rng = seed::rng(seed::derive(MASTER_SEED, &[107]));
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let dim = rng.random_range(1..=30);
        let mut dtheta = 0.0;
        let mut dp = 0.0;
        for _ in 0..dim {
            let (a, b): (f64, f64) = if rng.random::<bool>() {
                (rng.random_range(0.0..0.999), rng.random_range(0.0..0.999))
            } else {
                (rng.random::<f64>().powi(4), rng.random::<f64>())
            };
            let (ta, tb) = (p_to_theta(a).unwrap(), p_to_theta(b).unwrap());
            dtheta += (ta - tb) * (ta - tb);
            let (pa, pb) = (theta_to_p(ta), theta_to_p(tb));
            dp += (pa - pb) * (pa - pb);
        }
        worst = worst.min(dtheta.sqrt() - dp.sqrt());
    }
    Outcome::new(worst >= -1e-12, format!("min ||dtheta|| - ||dp|| over 10000 pairs: {worst:.3e} (>= -1e-12)"))
}

fn rate_check() -> Outcome {
    let topology = desk_topology();
    let (mut small, mut large) = (Vec::new(), Vec::new());
    for s in 0..20 {
        let g = desk_graph(&topology, s);
        let traces = cascades(&g, 4000, s);
        small.push(median(&infer(&g, &traces[..1000], Estimator::SparseMle).1));
        large.push(median(&infer(&g, &traces, Estimator::SparseMle).1));
    }
    let (a, b) = (median(&small), median(&large));
    let ratio = b / a;
    Outcome::new(
        ratio <= 0.6,
        format!("median per-node l2 over 20 seeds: n=1000 {a:.4}, n=4000 {b:.4}, ratio {ratio:.3} (<= 0.6)"),
    )
}

fn support_recovery() -> Outcome {
    let topology = desk_topology();
    let seeds = 3u64;
    let ns = [250, 1000, 5000];
    let mut sparse = [0.0; 3];
    let mut mle = [0.0; 3];
    for s in 0..seeds {
        let g = desk_graph(&topology, s);
        let traces = cascades(&g, 5000, s);
        for (k, &n) in ns.iter().enumerate() {
            sparse[k] += infer(&g, &traces[..n], Estimator::SparseMle).0 / seeds as f64;
            mle[k] += infer(&g, &traces[..n], Estimator::Mle).0 / seeds as f64;
        }
    }
    let ordered = (0..3).all(|k| sparse[k] >= mle[k] - 0.02);
    let cells: Vec<String> = (0..3)
        .map(|k| format!("n={} sparse {:.4} mle {:.4}", ns[k], sparse[k], mle[k]))
        .collect();
    Outcome::new(
        sparse[2] >= 0.85 && ordered,
        format!("mean F1 over {seeds} seeds: {} (sparse >= 0.85 at n=5000, >= mle - 0.02 everywhere)", cells.join("; ")),
    )
}

fn approximate_sparsity() -> Outcome {
    let topology = desk_topology();
    let strong = desk_graph(&topology, 0);
    let weak = add_weak_edges(&strong, 1.0 / 3.0, 0.0, 0.1, seed::derive(MASTER_SEED, &[tag::WEAK_EDGES, 0])).unwrap();
    let strong_traces = cascades(&strong, 5000, 0);
    let weak_traces = cascades(&weak, 5000, 0);

    let mut weak_l2 = Vec::new();
    let mut ratios = Vec::new();
    for estimator in [Estimator::SparseMle, Estimator::Mle, Estimator::Lasso, Estimator::Greedy] {
        let with_weak = infer(&weak, &weak_traces, estimator).2;
        weak_l2.push((estimator, with_weak));
        if estimator != Estimator::Greedy {
            let without = infer(&strong, &strong_traces, estimator).2;
            ratios.push((estimator, with_weak / without));
        }
    }
    let sparse_ratio = ratios[0].1;
    let mut ranked = weak_l2.clone();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let top: BTreeSet<&str> = ranked[..2].iter().map(|(e, _)| e.as_str()).collect();
    let expected: BTreeSet<&str> = [Estimator::SparseMle.as_str(), Estimator::Lasso.as_str()].into();
    let l2_text: Vec<String> = ranked.iter().map(|(e, v)| format!("{} {v:.3}", e.as_str())).collect();
    let ratio_text: Vec<String> = ratios.iter().map(|(e, v)| format!("{} {v:.3}", e.as_str())).collect();
    Outcome::new(
        sparse_ratio < 2.0 && top == expected,
        format!(
            "sparse-mle degradation {sparse_ratio:.3} (< 2); l2 with weak edges at n=5000: {}; two best must be sparse-mle and lasso; degradation per estimator: {}",
            l2_text.join(", "),
            ratio_text.join(", ")
        ),
    )
}

fn pr_shape() -> Outcome {
    let t = generate_holme_kim(50, 3, 0.5, 1).unwrap();
    let g = assign_weights(&t, ModelKind::Ic, 0.2, 0.7, 2).unwrap();
    let model = CascadeModel::ic();
    let traces = batch_simulate(&g, &model, 300, P_INIT, 3).unwrap();
    let grid = [0.002, 0.005, 0.01, 0.02, 0.03, 0.05, 0.08, 0.12, 0.2];
    let curve = pr_curve(50, &traces, &model, &g.edge_set(), &grid, &InferenceSettings::default()).unwrap();
    // `curve` runs from the largest λ down; reverse to increasing λ.
    let recall: Vec<f64> = curve.iter().rev().map(|p| p.recall).collect();
    let precision: Vec<f64> = curve.iter().rev().map(|p| p.precision).collect();
    let (ri, pi) = (inversions(&recall, false), inversions(&precision, true));
    let points: Vec<String> = curve
        .iter()
        .rev()
        .map(|p| format!("{}:{:.3}/{:.3}", p.lambda, p.precision, p.recall))
        .collect();
    Outcome::new(
        ri <= 1 && pi <= 1,
        format!(
            "recall inversions {ri}, precision inversions {pi} (<= 1 each); lambda:precision/recall {}",
            points.join(" ")
        ),
    )
}

fn runtime_linearity() -> Outcome {
    let topology = desk_topology();
    let g = desk_graph(&topology, 0);
    let n = 1000;
    let time = |count: usize, trial: u64| {
        let traces = cascades(&g, count, 100 + trial);
        let start = Instant::now();
        infer_graph(DESK_NODES, &traces, &CascadeModel::ic(), &settings(Estimator::SparseMle)).unwrap();
        start.elapsed().as_secs_f64()
    };
    let single: Vec<f64> = (0..5).map(|t| time(n, t)).collect();
    let double: Vec<f64> = (0..5).map(|t| time(2 * n, t)).collect();
    let (a, b) = (median(&single), median(&double));
    Outcome::new(
        b <= 3.0 * a,
        format!("median solve time n={n} {a:.3}s, n={} {b:.3}s, ratio {:.2} (<= 3)", 2 * n, b / a),
    )
}

fn quotient(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let mut num = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            num += x[i] * a[(i, j)] * x[j];
        }
    }
    num / x.iter().map(|v| v * v).sum::<f64>()
}

fn in_cone(x: &[f64], support: &[usize]) -> bool {
    let (mut inside, mut outside) = (0.0, 0.0);
    for (k, v) in x.iter().enumerate() {
        if support.contains(&k) {
            inside += v.abs();
        } else {
            outside += v.abs();
        }
    }
    inside > 0.0 && outside <= 3.0 * inside + 1e-12
}

fn odometer(idx: &mut [i64], lo: i64, hi: i64) -> bool {
    for v in idx.iter_mut() {
        *v += 1;
        if *v <= hi {
            return true;
        }
        *v = lo;
    }
    false
}

/// Cone minimum of the Rayleigh quotient: a 0.05 grid on every face
/// `x_f = 1` of the ℓ∞ sphere, then nested local grids around the best
/// cells down to spacing 2e-6.
fn cone_grid_oracle(a: &DMatrix<f64>, support: &[usize]) -> f64 {
    let dim = a.nrows();
    let coarse = 0.05;
    let steps = (2.0 / coarse) as i64;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    for face in 0..dim {
        let free: Vec<usize> = (0..dim).filter(|&k| k != face).collect();
        let mut idx = vec![0i64; free.len()];
        loop {
            let mut x = vec![0.0; dim];
            x[face] = 1.0;
            for (c, &k) in free.iter().enumerate() {
                x[k] = -1.0 + coarse * idx[c] as f64;
            }
            if in_cone(&x, support) {
                best.push((quotient(a, &x), x));
                if best.len() > 4000 {
                    best.sort_by(|p, q| p.0.total_cmp(&q.0));
                    best.truncate(40);
                }
            }
            if !odometer(&mut idx, 0, steps) {
                break;
            }
        }
    }
    best.sort_by(|p, q| p.0.total_cmp(&q.0));
    best.truncate(10);
    let mut value = best[0].0;
    for (_, start) in best {
        let mut center = start;
        let mut step = coarse / 5.0;
        for _ in 0..5 {
            let mut local = (quotient(a, &center), center.clone());
            let mut idx = vec![-4i64; dim];
            loop {
                let x: Vec<f64> = center.iter().zip(&idx).map(|(c, &d)| c + step * d as f64).collect();
                if in_cone(&x, support) {
                    let q = quotient(a, &x);
                    if q < local.0 {
                        local = (q, x);
                    }
                }
                if !odometer(&mut idx, -4, 4) {
                    break;
                }
            }
            center = local.1;
            value = value.min(local.0);
            step /= 10.0;
        }
    }
    value
}

fn diagnostics() -> Outcome {
    let mut notes = Vec::new();
    let mut identity_ok = true;
    for dim in [1, 3, 8, 20] {
        let support: Vec<usize> = (0..dim).step_by(2).collect();
        let re = re_estimate(&DMatrix::identity(dim, dim), &support, 500, seed::derive(MASTER_SEED, &[108])).unwrap();
        identity_ok &= re.gamma_upper == 1.0 && re.gamma_sampled == 1.0;
    }
    notes.push(format!("identity exact: {identity_ok}"));

    let mut worst = 0.0f64;
    for k in 0..5u64 {
        let mut rng = seed::rng(seed::derive(MASTER_SEED, &[109, k]));
        let rank = 2 + (k as usize % 3);
        let b = DMatrix::from_fn(rank, 5, |_, _| rng.random_range(-1.0..1.0));
        let a = b.transpose() * b;
        let support = [0, 2];
        let oracle = cone_grid_oracle(&a, &support);
        let re = re_estimate(&a, &support, 5000, seed::derive(MASTER_SEED, &[110, k])).unwrap();
        worst = worst.max((re.gamma_sampled - oracle).abs());
    }
    notes.push(format!("5x5 grid oracle max gap {worst:.2e} (<= 1e-3)"));

    let t = generate_watts_strogatz(20, 4, 0.1, seed::derive(MASTER_SEED, &[111])).unwrap();
    let g = assign_weights(&t, ModelKind::Ic, 0.2, 0.7, seed::derive(MASTER_SEED, &[112])).unwrap();
    let config = ConcentrationConfig {
        n_grid: vec![50, 200, 800, 3200],
        trials: 20,
        p_init: 0.1,
        re_samples: 300,
        seed: seed::derive(MASTER_SEED, &[113]),
    };
    let report = hessian_concentration(&g, &CascadeModel::ic(), 3, &config).unwrap();
    let fractions: Vec<f64> = report.summary.iter().map(|s| s.fraction_re_half).collect();
    let inv = inversions(&fractions, true);
    notes.push(format!("concentration fractions {fractions:?} at n {:?}, inversions {inv} (<= 1)", config.n_grid));
    Outcome::new(identity_ok && worst <= 1e-3 && inv <= 1, notes.join("; "))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((name, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn cli_determinism() -> Outcome {
    let config = "[experiment]\nname = det\nseed = 9\nseeds = 2\n[graph]\nkind = ws\nnodes = 20\nneighbors = 4\nweight_low = 0.2\nweight_high = 0.7\n[model]\nkind = ic\n[cascades]\nn_list = 50, 100\np_init = 0.1\n[inference]\nestimators = sparse-mle, mle, greedy, lasso\n[output]\nplots = f1_vs_n, l2_vs_n\n";
    let commands: [&[&str]; 5] = [
        &["generate", "--kind", "ws", "--nodes", "30", "--neighbors", "4", "--model", "ic", "--seed", "5", "--out", "g.tsv"],
        &["simulate", "--graph", "g.tsv", "--n", "200", "--p-init", "0.1", "--seed", "6", "--out", "t.jsonl"],
        &["infer", "--traces", "t.jsonl", "--alpha", "0.2", "--lambda-scale", "0.05", "--out", "e.tsv"],
        &["experiment", "--config", "det.cfg", "--out", "bundle", "--no-timing"],
        &[
            "diagnose", "--graph", "g.tsv", "--traces", "t.jsonl", "--node", "3", "--re-samples", "100", "--n-grid", "100",
            "--trials", "2", "--seed", "7", "--out", "d/diag",
        ],
    ];
    let run = || -> Result<Vec<(String, Vec<u8>)>, String> {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("det.cfg"), config).unwrap();
        for args in commands {
            let out = Command::new(env!("CARGO_BIN_EXE_glc"))
                .args(args)
                .current_dir(dir.path())
                .env("SOURCE_DATE_EPOCH", "1700000000")
                .output()
                .unwrap();
            if !out.status.success() {
                return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr)));
            }
        }
        Ok(snapshot(dir.path()))
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            let differing: Vec<&str> = a
                .iter()
                .zip(&b)
                .filter(|(x, y)| x != y)
                .map(|(x, _)| x.0.as_str())
                .collect();
            let same_names = a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.0 == y.0);
            Outcome::new(
                same_names && differing.is_empty(),
                format!(
                    "{} artifacts from generate, simulate, infer, experiment, diagnose; {} differ{}",
                    a.len(),
                    differing.len(),
                    if differing.is_empty() { String::new() } else { format!(": {differing:?}") }
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => Outcome::new(false, e),
    }
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "gradient/hessian vs finite differences", gradient_hessian),
        (2, "sparse MLE vs grid oracle", oracle_equivalence),
        (3, "simulator fidelity", simulator_fidelity),
        (4, "parameter-space error dominates probability error", theta_error_dominates),
        (5, "error rate in n", rate_check),
        (6, "support recovery", support_recovery),
        (7, "approximate sparsity", approximate_sparsity),
        (8, "precision-recall shape", pr_shape),
        (9, "runtime linear in n", runtime_linearity),
        (10, "diagnostics", diagnostics),
        (11, "CLI determinism", cli_determinism),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");

    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict}: {name} | {} | {:.1}s",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        if !outcome.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        if strict {
            std::process::exit(1);
        }
    }
}
