//! Empirical checks of the conditions behind the recovery guarantees: the
//! Gram matrix of the observations, restricted eigenvalues over the cone
//! `C(S) = {x : ‖x_{S^c}‖₁ <= 3 ‖x_S‖₁}`, the (LF)/(LF2) constants and the
//! concentration of sample Hessians around their expectation.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cascade::{batch_simulate, pool_measurements, CascadeError, CascadeModel, MeasurementSet};
use crate::graph::{Graph, GraphError};
use crate::recovery::objective::NegLogLikelihood;
use crate::recovery::{RecoveryError, DEFAULT_EPS_CLAMP};
use crate::seed;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("no measurements")]
    Empty,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
}

// Cone ratio: ‖x_{S^c}‖₁ <= CONE * ‖x_S‖₁.
const CONE: f64 = 3.0;

/// `(1/n) Σ_t x_t x_tᵀ`.
pub fn gram_matrix(set: &MeasurementSet) -> Result<DMatrix<f64>, DiagnosticsError> {
    if set.is_empty() {
        return Err(DiagnosticsError::Empty);
    }
    let m = set.num_nodes;
    let mut counts = DMatrix::<f64>::zeros(m, m);
    for meas in &set.measurements {
        for &a in &meas.active {
            for &b in &meas.active {
                counts[(a, b)] += 1.0;
            }
        }
    }
    Ok(counts / set.len() as f64)
}

/// Sample Hessian of the negative log-likelihood at `theta` together with
/// the smallest per-measurement curvature weight `c`, so that
/// `H ⪰ c · gram_matrix(set)`.
pub fn hessian_with_floor(
    theta: &[f64],
    set: &MeasurementSet,
    model: &CascadeModel,
) -> Result<(DMatrix<f64>, f64), DiagnosticsError> {
    if set.is_empty() {
        return Err(DiagnosticsError::Empty);
    }
    if theta.len() != set.num_nodes {
        return Err(DiagnosticsError::Parameter(format!(
            "theta has length {}, expected {}",
            theta.len(),
            set.num_nodes
        )));
    }
    let loss = NegLogLikelihood::new(set, model, DEFAULT_EPS_CLAMP);
    let weights = loss.curvature_weights(theta);
    let floor = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let design = crate::recovery::objective::Design::new(set);
    Ok((design.weighted_gram(&weights), floor))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReEstimate {
    pub support: Vec<usize>,
    /// Smallest eigenvalue of the `S × S` principal submatrix, an upper
    /// bound on the restricted eigenvalue.
    pub gamma_upper: f64,
    /// Smallest Rayleigh quotient found over sampled and locally refined
    /// cone directions.
    pub gamma_sampled: f64,
    pub num_samples: usize,
}

fn check_symmetric(matrix: &DMatrix<f64>) -> Result<(), DiagnosticsError> {
    if !matrix.is_square() {
        return Err(DiagnosticsError::Domain(format!(
            "matrix is {}x{}, not square",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let scale = matrix.amax().max(1.0);
    let n = matrix.nrows();
    for i in 0..n {
        for j in 0..i {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                return Err(DiagnosticsError::Domain(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Tracks `x`, `A x`, `xᵀ A x`, `‖x‖²` and the two ℓ1 masses so that
/// single- and two-coordinate moves are evaluated in constant time.
struct ConePoint<'a> {
    a: &'a DMatrix<f64>,
    on_support: &'a [bool],
    x: Vec<f64>,
    ax: Vec<f64>,
    quad: f64,
    norm_sq: f64,
    l1_in: f64,
    l1_out: f64,
}

impl<'a> ConePoint<'a> {
    fn new(a: &'a DMatrix<f64>, on_support: &'a [bool], x: Vec<f64>) -> Self {
        let xv = nalgebra::DVector::from_column_slice(&x);
        let ax: Vec<f64> = (a * &xv).iter().copied().collect();
        let quad = x.iter().zip(&ax).map(|(u, v)| u * v).sum();
        let norm_sq = x.iter().map(|u| u * u).sum();
        let (mut l1_in, mut l1_out) = (0.0, 0.0);
        for (k, &v) in x.iter().enumerate() {
            if on_support[k] {
                l1_in += v.abs();
            } else {
                l1_out += v.abs();
            }
        }
        Self {
            a,
            on_support,
            x,
            ax,
            quad,
            norm_sq,
            l1_in,
            l1_out,
        }
    }

    fn quotient(&self) -> f64 {
        self.quad / self.norm_sq
    }

    fn l1_after(&self, k: usize, d: f64, l1: (f64, f64)) -> (f64, f64) {
        let delta = (self.x[k] + d).abs() - self.x[k].abs();
        if self.on_support[k] {
            (l1.0 + delta, l1.1)
        } else {
            (l1.0, l1.1 + delta)
        }
    }

    /// Rayleigh quotient after adding `d_k e_k + d_l e_l` (`l` optional),
    /// or `None` if the move leaves the cone.
    fn trial(&self, k: usize, dk: f64, other: Option<(usize, f64)>) -> Option<f64> {
        let mut l1 = self.l1_after(k, dk, (self.l1_in, self.l1_out));
        let mut quad = self.quad + 2.0 * dk * self.ax[k] + dk * dk * self.a[(k, k)];
        let mut norm_sq = self.norm_sq + 2.0 * dk * self.x[k] + dk * dk;
        if let Some((l, dl)) = other {
            l1 = self.l1_after(l, dl, l1);
            quad += 2.0 * dl * self.ax[l] + dl * dl * self.a[(l, l)] + 2.0 * dk * dl * self.a[(k, l)];
            norm_sq += 2.0 * dl * self.x[l] + dl * dl;
        }
        if l1.1 > CONE * l1.0 * (1.0 + 1e-12) || norm_sq <= 1e-24 || l1.0 <= 0.0 {
            return None;
        }
        Some(quad / norm_sq)
    }

    fn apply(&mut self, k: usize, d: f64) {
        let l1 = self.l1_after(k, d, (self.l1_in, self.l1_out));
        self.l1_in = l1.0;
        self.l1_out = l1.1;
        self.quad += 2.0 * d * self.ax[k] + d * d * self.a[(k, k)];
        self.norm_sq += 2.0 * d * self.x[k] + d * d;
        self.x[k] += d;
        for (i, v) in self.ax.iter_mut().enumerate() {
            *v += d * self.a[(i, k)];
        }
    }

    fn renormalize(&mut self) {
        let s = self.norm_sq.sqrt();
        let x: Vec<f64> = self.x.iter().map(|v| v / s).collect();
        *self = ConePoint::new(self.a, self.on_support, x);
    }
}

// Coordinate pairs are only tried below this dimension.
const PAIR_MOVE_LIMIT: usize = 40;
const SWEEPS_PER_STEP: usize = 50;

/// Pattern search over coordinate and coordinate-pair moves that stay in the
/// cone, halving the step until it drops below `1e-9`. A step size is kept
/// for at most `SWEEPS_PER_STEP` sweeps; a sweep whose total gain is below
/// `1e-12` relative to the matrix scale counts as no progress.
fn refine(point: &mut ConePoint<'_>) {
    let m = point.x.len();
    let scale = (0..m).map(|k| point.a[(k, k)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut step = 0.25;
    let mut best = point.quotient();
    let mut sweeps = 0;
    while step > 1e-9 {
        let start = best;
        sweeps += 1;
        let mut improved = false;
        for k in 0..m {
            for dk in [step, -step] {
                if let Some(q) = point.trial(k, dk, None) {
                    if q < best - 1e-15 {
                        point.apply(k, dk);
                        best = q;
                        improved = true;
                    }
                }
            }
        }
        if m <= PAIR_MOVE_LIMIT {
            for k in 0..m {
                for l in (k + 1)..m {
                    for (sk, sl) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0), (CONE, 1.0), (CONE, -1.0), (1.0, CONE), (-1.0, CONE)] {
                        for sign in [1.0, -1.0] {
                            let (dk, dl) = (sign * sk * step, sign * sl * step);
                            if let Some(q) = point.trial(k, dk, Some((l, dl))) {
                                if q < best - 1e-15 {
                                    point.apply(k, dk);
                                    point.apply(l, dl);
                                    best = q;
                                    improved = true;
                                }
                            }
                        }
                    }
                }
            }
        }
        point.renormalize();
        best = point.quotient();
        if !improved || start - best <= 1e-12 * scale || sweeps >= SWEEPS_PER_STEP {
            step *= 0.5;
            sweeps = 0;
        }
    }
}

fn sample_cone_direction(rng: &mut ChaCha8Rng, support: &[usize], off: &[usize], m: usize) -> Vec<f64> {
    let mut x = vec![0.0; m];
    let mut l1_in = 0.0;
    for &k in support {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let v = sign * rng.random::<f64>();
        x[k] = v;
        l1_in += v.abs();
    }
    if l1_in == 0.0 {
        x[support[0]] = 1.0;
        l1_in = 1.0;
    }
    if !off.is_empty() {
        let u: f64 = rng.random();
        let raw: Vec<f64> = off
            .iter()
            .map(|_| {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * rng.random::<f64>()
            })
            .collect();
        let raw_l1: f64 = raw.iter().map(|v| v.abs()).sum();
        if raw_l1 > 0.0 {
            let scale = u * CONE * l1_in / raw_l1;
            for (&k, v) in off.iter().zip(raw) {
                x[k] = v * scale;
            }
        }
    }
    x
}

fn rayleigh(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(x);
    (v.transpose() * a * &v)[(0, 0)] / v.norm_squared()
}

// Number of best sampled directions that are locally refined.
const REFINED_STARTS: usize = 8;

/// Restricted-eigenvalue estimates of `matrix` on support `support`.
pub fn re_estimate(
    matrix: &DMatrix<f64>,
    support: &[usize],
    num_samples: usize,
    seed: u64,
) -> Result<ReEstimate, DiagnosticsError> {
    check_symmetric(matrix)?;
    let m = matrix.nrows();
    if support.is_empty() {
        return Err(DiagnosticsError::Parameter("support must be nonempty".into()));
    }
    let mut on_support = vec![false; m];
    for &k in support {
        if k >= m {
            return Err(DiagnosticsError::Parameter(format!("support index {k} outside {m}")));
        }
        if on_support[k] {
            return Err(DiagnosticsError::Parameter(format!("support index {k} repeated")));
        }
        on_support[k] = true;
    }
    let off: Vec<usize> = (0..m).filter(|&k| !on_support[k]).collect();

    let sub = DMatrix::from_fn(support.len(), support.len(), |a, b| matrix[(support[a], support[b])]);
    let eig = SymmetricEigen::new(sub);
    let (min_idx, gamma_upper) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut eigvec = vec![0.0; m];
    for (a, &k) in support.iter().enumerate() {
        eigvec[k] = eig.eigenvectors[(a, min_idx)];
    }

    let mut rng = seed::rng(seed::derive(seed, &[seed::tag::DIAGNOSTICS]));
    let mut candidates: Vec<(f64, Vec<f64>)> = (0..num_samples)
        .map(|_| {
            let x = sample_cone_direction(&mut rng, support, &off, m);
            (rayleigh(matrix, &x), x)
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.truncate(REFINED_STARTS);
    candidates.push((gamma_upper, eigvec));

    let gamma_sampled = candidates
        .into_iter()
        .map(|(_, x)| {
            let mut point = ConePoint::new(matrix, &on_support, x);
            refine(&mut point);
            point.quotient()
        })
        .fold(gamma_upper, f64::min);

    Ok(ReEstimate {
        support: support.to_vec(),
        gamma_upper,
        gamma_sampled,
        num_samples,
    })
}

/// Empirical (LF) / (LF2) constants over the observed predictors
/// `z_t = <θ*, x_t>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfConstants {
    /// `max_t max(|(log f)'(z_t)|, |(log(1-f))'(z_t)|)`
    pub max_first: f64,
    /// `max_t max(|(log f)''(z_t)|, |(log(1-f))''(z_t)|)`
    pub max_second: f64,
    /// `1 / max_first`
    pub alpha_lf: f64,
    /// `1 / max_second`
    pub alpha_lf2: f64,
    pub used: usize,
    /// Measurements whose `z_t` sits where `f(z_t) ∈ {0, 1}`.
    pub excluded: usize,
}

pub fn lf_constants(
    model: &CascadeModel,
    set: &MeasurementSet,
    theta_star: &[f64],
) -> Result<LfConstants, DiagnosticsError> {
    if theta_star.len() != set.num_nodes {
        return Err(DiagnosticsError::Parameter(format!(
            "theta has length {}, expected {}",
            theta_star.len(),
            set.num_nodes
        )));
    }
    if set.is_empty() {
        return Err(DiagnosticsError::Empty);
    }
    let (mut max_first, mut max_second) = (0.0f64, 0.0f64);
    let (mut used, mut excluded) = (0, 0);
    for meas in &set.measurements {
        let z: f64 = meas.active.iter().map(|&k| theta_star[k]).sum();
        match (model.link_log_derivatives(z), model.link_log_second_derivatives(z)) {
            (Ok((a, b)), Ok((c, d))) => {
                max_first = max_first.max(a.abs()).max(b.abs());
                max_second = max_second.max(c.abs()).max(d.abs());
                used += 1;
            }
            _ => excluded += 1,
        }
    }
    Ok(LfConstants {
        max_first,
        max_second,
        alpha_lf: 1.0 / max_first,
        alpha_lf2: 1.0 / max_second,
        used,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    pub trial: usize,
    /// Largest entrywise deviation from the expected Hessian.
    pub max_dev: f64,
    pub gamma_upper: f64,
    pub gamma_sampled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationSummary {
    pub n: usize,
    pub median_max_dev: f64,
    /// Fraction of trials with `gamma_sampled >= expected.gamma_sampled / 2`.
    pub fraction_re_half: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub node: usize,
    pub support: Vec<usize>,
    pub expected: ReEstimate,
    /// Measurements used for the expected Hessian.
    pub expected_n: usize,
    pub rows: Vec<ConcentrationRow>,
    pub summary: Vec<ConcentrationSummary>,
}

impl ConcentrationReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,trial,max_dev,gamma_upper,gamma_sampled")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.12e},{:.12e},{:.12e}",
                r.n, r.trial, r.max_dev, r.gamma_upper, r.gamma_sampled
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,median_max_dev,fraction_re_half")?;
        for s in &self.summary {
            writeln!(out, "{},{:.12e},{:.6}", s.n, s.median_max_dev, s.fraction_re_half)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationConfig {
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub p_init: f64,
    pub re_samples: usize,
    pub seed: u64,
}

// Cascades simulated per batch while collecting measurements.
const CASCADE_CHUNK: usize = 256;

/// Collects exactly `n` measurements of `node` from fresh cascades.
fn collect_measurements(
    graph: &Graph,
    model: &CascadeModel,
    node: usize,
    n: usize,
    p_init: f64,
    seed: u64,
) -> Result<MeasurementSet, DiagnosticsError> {
    let m = graph.num_nodes();
    let mut set = MeasurementSet::new(node, m);
    let mut chunk = 0u64;
    while set.len() < n {
        let traces = batch_simulate(graph, model, CASCADE_CHUNK, p_init, seed::derive(seed, &[chunk]))?;
        set.measurements
            .extend(pool_measurements(&traces, node, m)?.measurements);
        chunk += 1;
        if chunk > 10_000 && set.is_empty() {
            return Err(DiagnosticsError::Domain(format!(
                "node {node} produced no measurements"
            )));
        }
    }
    set.truncate(n);
    Ok(set)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Compares sample Hessians at `θ*` built from `n` measurements against an
/// expected Hessian estimated from ten times the largest `n`.
pub fn hessian_concentration(
    graph: &Graph,
    model: &CascadeModel,
    node: usize,
    config: &ConcentrationConfig,
) -> Result<ConcentrationReport, DiagnosticsError> {
    let theta_star = graph.column(node)?;
    let support: Vec<usize> = graph.incoming(node).iter().map(|&(s, _)| s).collect();
    if support.is_empty() {
        return Err(DiagnosticsError::Parameter(format!("node {node} has no parents")));
    }
    if config.n_grid.is_empty() || config.n_grid.contains(&0) {
        return Err(DiagnosticsError::Parameter("n_grid must hold positive counts".into()));
    }
    if config.trials == 0 {
        return Err(DiagnosticsError::Parameter("trials must be at least 1".into()));
    }
    let largest = *config.n_grid.iter().max().expect("nonempty");
    let expected_n = 10 * largest;
    let base = seed::derive(config.seed, &[seed::tag::DIAGNOSTICS, node as u64]);
    let expected_set = collect_measurements(graph, model, node, expected_n, config.p_init, seed::derive(base, &[0]))?;
    let (expected_h, _) = hessian_with_floor(&theta_star, &expected_set, model)?;
    let expected = re_estimate(&expected_h, &support, config.re_samples, seed::derive(base, &[1]))?;

    let cells: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |trial| (n, trial)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(n, trial)| {
            let cell_seed = seed::derive(base, &[2, n as u64, trial as u64]);
            let set = collect_measurements(graph, model, node, n, config.p_init, cell_seed)?;
            let (h, _) = hessian_with_floor(&theta_star, &set, model)?;
            let max_dev = (&h - &expected_h).amax();
            let re = re_estimate(&h, &support, config.re_samples, seed::derive(cell_seed, &[1]))?;
            Ok(ConcentrationRow {
                n,
                trial,
                max_dev,
                gamma_upper: re.gamma_upper,
                gamma_sampled: re.gamma_sampled,
            })
        })
        .collect::<Result<Vec<_>, DiagnosticsError>>()?;

    let summary = config
        .n_grid
        .iter()
        .map(|&n| {
            let cell: Vec<&ConcentrationRow> = rows.iter().filter(|r| r.n == n).collect();
            let mut devs: Vec<f64> = cell.iter().map(|r| r.max_dev).collect();
            let ok = cell
                .iter()
                .filter(|r| r.gamma_sampled >= expected.gamma_sampled / 2.0)
                .count();
            ConcentrationSummary {
                n,
                median_max_dev: median(&mut devs),
                fraction_re_half: ok as f64 / cell.len() as f64,
            }
        })
        .collect();

    Ok(ConcentrationReport {
        node,
        support,
        expected,
        expected_n,
        rows,
        summary,
    })
}
