//! Per-node objectives.
//!
//! Both losses depend on θ only through the linear predictors
//! `z_t = <θ, x_t>`, so they are evaluated on a compressed-row copy of the
//! measurement indicators and expose the per-row derivative `∂ℓ/∂z_t`; the
//! gradient is then `Xᵀ r`.

use nalgebra::DMatrix;

use super::RecoveryError;
use crate::cascade::{CascadeModel, MeasurementSet, ModelKind};

/// Compressed-row storage of the binary measurement matrix.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub dim: usize,
    pub offsets: Vec<usize>,
    pub indices: Vec<u32>,
    pub outcomes: Vec<bool>,
}

impl Design {
    pub fn new(set: &MeasurementSet) -> Self {
        let mut offsets = Vec::with_capacity(set.len() + 1);
        let mut indices = Vec::new();
        let mut outcomes = Vec::with_capacity(set.len());
        offsets.push(0);
        for m in &set.measurements {
            indices.extend(m.active.iter().map(|&i| i as u32));
            offsets.push(indices.len());
            outcomes.push(m.outcome);
        }
        Self {
            dim: set.num_nodes,
            offsets,
            indices,
            outcomes,
        }
    }

    pub fn rows(&self) -> usize {
        self.outcomes.len()
    }

    pub fn row(&self, t: usize) -> &[u32] {
        &self.indices[self.offsets[t]..self.offsets[t + 1]]
    }

    /// `z = X θ`
    pub fn mul(&self, theta: &[f64], z: &mut [f64]) {
        for (t, zt) in z.iter_mut().enumerate() {
            *zt = self.row(t).iter().map(|&i| theta[i as usize]).sum();
        }
    }

    /// `out = Xᵀ r`
    pub fn tmul(&self, r: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (t, &rt) in r.iter().enumerate() {
            if rt == 0.0 {
                continue;
            }
            for &i in self.row(t) {
                out[i as usize] += rt;
            }
        }
    }

    /// Row indices containing each coordinate.
    pub fn columns(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.dim];
        for t in 0..self.rows() {
            for &i in self.row(t) {
                cols[i as usize].push(t);
            }
        }
        cols
    }

    /// `(1/n) Σ_t w_t x_t x_tᵀ`
    pub fn weighted_gram(&self, weights: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        let scale = 1.0 / self.rows() as f64;
        for (t, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = self.row(t);
            for &a in row {
                for &b in row {
                    h[(a as usize, b as usize)] += scale * w;
                }
            }
        }
        h
    }
}

/// Neumaier summation; objective differences near the optimum are a few
/// ulps of the objective itself.
#[derive(Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// A smooth loss of the linear predictors, already normalized by `1/n`.
pub(crate) trait SmoothLoss: Sync {
    fn design(&self) -> &Design;

    fn value_z(&self, z: &[f64]) -> f64;

    /// Value, with `r_t = ∂loss/∂z_t` written into `r`.
    fn value_and_residual(&self, z: &[f64], r: &mut [f64]) -> f64;
}

/// Negative log-likelihood terms with the link probability clamped to
/// `[eps, 1 - eps]` inside the logarithms.
///
/// `log f` is replaced below `z_lo = f⁻¹(eps)` by its tangent line at
/// `z_lo`, and `log(1 - f)` above `z_hi = f⁻¹(1 - eps)` by its tangent at
/// `z_hi`. The clamped terms agree with `log(eps)` at the clamp point, stay
/// convex and differentiable, and keep a nonzero slope so that a solver
/// started at a boundary can move off it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ClampedLink {
    model: CascadeModel,
    z_lo: f64,
    z_hi: f64,
    // (log f)(z_lo), (log f)'(z_lo)
    lo_value: f64,
    lo_slope: f64,
    // (log(1-f))(z_hi), (log(1-f))'(z_hi)
    hi_value: f64,
    hi_slope: f64,
}

impl ClampedLink {
    pub fn new(model: &CascadeModel, eps: f64) -> Self {
        let z_lo = model.inverse_link(eps);
        let z_hi = model.inverse_link(1.0 - eps);
        let (lo_value, _) = model.log_link(z_lo);
        let (lo_slope, _) = model.log_first_unchecked(z_lo);
        let (_, hi_value) = model.log_link(z_hi);
        let (_, hi_slope) = model.log_first_unchecked(z_hi);
        Self {
            model: *model,
            z_lo,
            z_hi,
            lo_value,
            lo_slope,
            hi_value,
            hi_slope,
        }
    }

    /// Negative log-likelihood of one outcome: value and first two
    /// derivatives in `z`.
    #[inline]
    pub fn term(&self, z: f64, outcome: bool) -> (f64, f64, f64) {
        if outcome {
            if z < self.z_lo {
                let v = self.lo_value + self.lo_slope * (z - self.z_lo);
                return (-v, -self.lo_slope, 0.0);
            }
            let (v, _) = self.model.log_link(z);
            let (d1, _) = self.model.log_first_unchecked(z);
            let (d2, _) = self.model.log_second_unchecked(z);
            (-v, -d1, -d2)
        } else {
            if z > self.z_hi {
                let v = self.hi_value + self.hi_slope * (z - self.z_hi);
                return (-v, -self.hi_slope, 0.0);
            }
            let (_, v) = self.model.log_link(z);
            let (_, d1) = self.model.log_first_unchecked(z);
            let (_, d2) = self.model.log_second_unchecked(z);
            (-v, -d1, -d2)
        }
    }

    #[inline]
    pub fn term_value(&self, z: f64, outcome: bool) -> f64 {
        if outcome {
            if z < self.z_lo {
                return -(self.lo_value + self.lo_slope * (z - self.z_lo));
            }
            -self.model.log_link(z).0
        } else {
            if z > self.z_hi {
                return -(self.hi_value + self.hi_slope * (z - self.z_hi));
            }
            -self.model.log_link(z).1
        }
    }

    #[inline]
    pub fn term_slope(&self, z: f64, outcome: bool) -> f64 {
        if outcome {
            if z < self.z_lo {
                return -self.lo_slope;
            }
            -self.model.log_first_unchecked(z).0
        } else {
            if z > self.z_hi {
                return -self.hi_slope;
            }
            -self.model.log_first_unchecked(z).1
        }
    }
}

/// `-(1/n) Σ_t [y_t log f(z_t) + (1 - y_t) log(1 - f(z_t))]`
pub(crate) struct NegLogLikelihood {
    design: Design,
    link: ClampedLink,
}

impl NegLogLikelihood {
    pub fn new(set: &MeasurementSet, model: &CascadeModel, eps: f64) -> Self {
        Self {
            design: Design::new(set),
            link: ClampedLink::new(model, eps),
        }
    }

    pub fn link(&self) -> &ClampedLink {
        &self.link
    }

    /// Curvature weights `w_t = ∂²ℓ_t/∂z²` at `θ`.
    pub fn curvature_weights(&self, theta: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.design.rows()];
        self.design.mul(theta, &mut z);
        z.iter()
            .zip(&self.design.outcomes)
            .map(|(&zt, &y)| self.link.term(zt, y).2)
            .collect()
    }
}

impl SmoothLoss for NegLogLikelihood {
    fn design(&self) -> &Design {
        &self.design
    }

    fn value_z(&self, z: &[f64]) -> f64 {
        let mut sum = CompensatedSum::default();
        for (&zt, &y) in z.iter().zip(&self.design.outcomes) {
            sum.add(self.link.term_value(zt, y));
        }
        sum.value() / self.design.rows() as f64
    }

    fn value_and_residual(&self, z: &[f64], r: &mut [f64]) -> f64 {
        let scale = 1.0 / self.design.rows() as f64;
        let mut sum = CompensatedSum::default();
        for ((&zt, &y), rt) in z.iter().zip(&self.design.outcomes).zip(r.iter_mut()) {
            sum.add(self.link.term_value(zt, y));
            *rt = scale * self.link.term_slope(zt, y);
        }
        sum.value() * scale
    }
}

/// `(1/n) Σ_t (f(z_t) - y_t)²`, with the identity link left unclipped for
/// the voter model so that it reduces to the ordinary lasso loss.
pub(crate) struct SquaredLoss {
    design: Design,
    model: CascadeModel,
}

impl SquaredLoss {
    pub fn new(set: &MeasurementSet, model: &CascadeModel) -> Self {
        Self {
            design: Design::new(set),
            model: *model,
        }
    }

    #[inline]
    fn link(&self, z: f64) -> f64 {
        match self.model.kind {
            ModelKind::Voter => z,
            _ => self.model.prob(z),
        }
    }
}

impl SmoothLoss for SquaredLoss {
    fn design(&self) -> &Design {
        &self.design
    }

    fn value_z(&self, z: &[f64]) -> f64 {
        let mut sum = CompensatedSum::default();
        for (&zt, &y) in z.iter().zip(&self.design.outcomes) {
            let d = self.link(zt) - if y { 1.0 } else { 0.0 };
            sum.add(d * d);
        }
        sum.value() / self.design.rows() as f64
    }

    fn value_and_residual(&self, z: &[f64], r: &mut [f64]) -> f64 {
        let scale = 1.0 / self.design.rows() as f64;
        let mut sum = CompensatedSum::default();
        for ((&zt, &y), rt) in z.iter().zip(&self.design.outcomes).zip(r.iter_mut()) {
            let d = self.link(zt) - if y { 1.0 } else { 0.0 };
            sum.add(d * d);
            *rt = scale * 2.0 * d * self.model.link_derivative(zt);
        }
        sum.value() * scale
    }
}

fn check_inputs(theta: &[f64], set: &MeasurementSet) -> Result<(), RecoveryError> {
    if set.is_empty() {
        return Err(RecoveryError::EmptyMeasurements { node: set.target });
    }
    if theta.len() != set.num_nodes {
        return Err(RecoveryError::Parameter(format!(
            "theta has length {}, measurements span {} nodes",
            theta.len(),
            set.num_nodes
        )));
    }
    Ok(())
}

/// Per-node negative log-likelihood with explicit probability clamp.
pub fn neg_log_likelihood_with(
    theta: &[f64],
    set: &MeasurementSet,
    model: &CascadeModel,
    eps_clamp: f64,
) -> Result<f64, RecoveryError> {
    check_inputs(theta, set)?;
    let loss = NegLogLikelihood::new(set, model, eps_clamp);
    let mut z = vec![0.0; set.len()];
    loss.design.mul(theta, &mut z);
    Ok(loss.value_z(&z))
}

/// `-(1/n) Σ_t [y_t log f(<θ, x_t>) + (1 - y_t) log(1 - f(<θ, x_t>))]` with
/// the default clamp.
pub fn neg_log_likelihood(theta: &[f64], set: &MeasurementSet, model: &CascadeModel) -> Result<f64, RecoveryError> {
    neg_log_likelihood_with(theta, set, model, super::DEFAULT_EPS_CLAMP)
}

pub fn gradient_with(
    theta: &[f64],
    set: &MeasurementSet,
    model: &CascadeModel,
    eps_clamp: f64,
) -> Result<Vec<f64>, RecoveryError> {
    check_inputs(theta, set)?;
    let loss = NegLogLikelihood::new(set, model, eps_clamp);
    let mut z = vec![0.0; set.len()];
    let mut r = vec![0.0; set.len()];
    loss.design.mul(theta, &mut z);
    loss.value_and_residual(&z, &mut r);
    let mut grad = vec![0.0; set.num_nodes];
    loss.design.tmul(&r, &mut grad);
    Ok(grad)
}

/// Gradient of [`neg_log_likelihood`]:
/// `-(1/n) Σ_t x_t [y_t (log f)'(z_t) + (1 - y_t) (log(1 - f))'(z_t)]`.
pub fn gradient(theta: &[f64], set: &MeasurementSet, model: &CascadeModel) -> Result<Vec<f64>, RecoveryError> {
    gradient_with(theta, set, model, super::DEFAULT_EPS_CLAMP)
}

pub fn hessian_with(
    theta: &[f64],
    set: &MeasurementSet,
    model: &CascadeModel,
    eps_clamp: f64,
) -> Result<DMatrix<f64>, RecoveryError> {
    check_inputs(theta, set)?;
    let loss = NegLogLikelihood::new(set, model, eps_clamp);
    let weights = loss.curvature_weights(theta);
    Ok(loss.design.weighted_gram(&weights))
}

/// Hessian of [`neg_log_likelihood`], the reweighted Gram matrix
/// `-(1/n) Σ_t x_t x_tᵀ [y_t (log f)''(z_t) + (1 - y_t) (log(1 - f))''(z_t)]`.
pub fn hessian(theta: &[f64], set: &MeasurementSet, model: &CascadeModel) -> Result<DMatrix<f64>, RecoveryError> {
    hessian_with(theta, set, model, super::DEFAULT_EPS_CLAMP)
}

/// Squared-loss objective `(1/n) Σ_t (f(z_t) - y_t)²` used by the lasso
/// benchmark.
pub fn squared_loss(theta: &[f64], set: &MeasurementSet, model: &CascadeModel) -> Result<f64, RecoveryError> {
    check_inputs(theta, set)?;
    let loss = SquaredLoss::new(set, model);
    let mut z = vec![0.0; set.len()];
    loss.design.mul(theta, &mut z);
    Ok(loss.value_z(&z))
}
