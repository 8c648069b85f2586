//! Accelerated proximal gradient with backtracking and adaptive restart.
//!
//! Minimizes `loss(θ) + λ ‖θ‖₁` over the box `0 <= θ <= upper`. The prox of
//! the penalty plus the box indicator is `clip(v - step·λ, 0, upper)`.
//! Extrapolation restarts whenever a step would increase the objective, so
//! accepted iterates have nonincreasing objective values.

use super::objective::{CompensatedSum, SmoothLoss};
use super::{RecoveryError, SolverConfig};

pub(crate) struct ProxOutcome {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

// Per-iteration step-size growth when the last step was accepted.
const STEP_GROWTH: f64 = 0.9;
const MAX_BACKTRACKS: usize = 200;
const MAX_STALLS: usize = 30;

fn penalized(loss_value: f64, lambda: f64, theta: &[f64]) -> f64 {
    let mut l1 = CompensatedSum::default();
    for &v in theta {
        l1.add(v);
    }
    loss_value + lambda * l1.value()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Default starting point: a small constant weight on every coordinate that
/// appears in some measurement (keeping each `z_t` strictly inside the
/// link's domain) and zero on the others, which the loss cannot move.
pub(crate) fn default_start(loss: &dyn SmoothLoss, upper: Option<f64>) -> Vec<f64> {
    let design = loss.design();
    let widest = (0..design.rows())
        .map(|t| design.row(t).len())
        .max()
        .unwrap_or(1)
        .max(1);
    let mut c = (0.5 / widest as f64).min(0.1);
    if let Some(u) = upper {
        c = c.min(u);
    }
    let mut start = vec![0.0; design.dim];
    for &i in &design.indices {
        start[i as usize] = c;
    }
    start
}

pub(crate) fn proximal_gradient(
    loss: &dyn SmoothLoss,
    lambda: f64,
    upper: Option<f64>,
    config: &SolverConfig,
    start: &[f64],
) -> Result<ProxOutcome, RecoveryError> {
    config.validate()?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(RecoveryError::Parameter(format!(
            "lambda must be a nonnegative number, got {lambda}"
        )));
    }
    let design = loss.design();
    let dim = design.dim;
    let rows = design.rows();
    if start.len() != dim {
        return Err(RecoveryError::Parameter(format!(
            "start has length {}, expected {dim}",
            start.len()
        )));
    }
    let upper_bound = upper.unwrap_or(f64::INFINITY);
    let project = |v: f64| v.clamp(0.0, upper_bound);

    let mut x: Vec<f64> = start.iter().map(|&v| project(v)).collect();
    let mut zx = vec![0.0; rows];
    design.mul(&x, &mut zx);
    let mut fx = penalized(loss.value_z(&zx), lambda, &x);
    if !fx.is_finite() {
        return Err(RecoveryError::Numerical {
            iteration: 0,
            message: format!("objective {fx} at the starting point"),
        });
    }

    let mut x_prev = x.clone();
    let mut z_prev = zx.clone();
    let mut y = x.clone();
    let mut zy = zx.clone();
    let mut x_new = vec![0.0; dim];
    let mut z_new = vec![0.0; rows];
    let mut grad = vec![0.0; dim];
    let mut residual = vec![0.0; rows];
    let mut lipschitz = 1.0 / config.initial_step;
    let mut momentum = 1.0f64;
    let mut restarted = true;
    let mut stalls = 0;
    let mut history = vec![fx];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let gy = loss.value_and_residual(&zy, &mut residual);
        design.tmul(&residual, &mut grad);

        let mut backtracks = 0;
        let (g_new, step_sq) = loop {
            let step = 1.0 / lipschitz;
            let mut inner = 0.0;
            let mut step_sq = 0.0;
            for j in 0..dim {
                let v = project(y[j] - step * (grad[j] + lambda));
                x_new[j] = v;
                let d = v - y[j];
                inner += grad[j] * d;
                step_sq += d * d;
            }
            design.mul(&x_new, &mut z_new);
            let g_new = loss.value_z(&z_new);
            let model = gy + inner + 0.5 * lipschitz * step_sq;
            if g_new <= model + 1e-14 * (1.0 + gy.abs()) {
                break (g_new, step_sq);
            }
            backtracks += 1;
            if backtracks > MAX_BACKTRACKS || !g_new.is_finite() && lipschitz > 1e300 {
                return Err(RecoveryError::Numerical {
                    iteration: iterations,
                    message: format!("line search failed (objective {g_new}, L = {lipschitz:e})"),
                });
            }
            lipschitz /= config.backtrack_shrink;
        };

        let f_new = penalized(g_new, lambda, &x_new);
        if !f_new.is_finite() {
            return Err(RecoveryError::Numerical {
                iteration: iterations,
                message: format!("objective became {f_new}"),
            });
        }
        let prox_step = step_sq.sqrt();
        if f_new > fx {
            if restarted {
                // A plain proximal step did not descend. With a valid step
                // size it must, so shrink the step; past MAX_STALLS the
                // objective is flat to machine precision.
                let threshold = config.tolerance * (1.0 + norm(&x));
                stalls += 1;
                if prox_step <= threshold || stalls > MAX_STALLS {
                    converged = prox_step <= threshold;
                    break;
                }
                lipschitz /= config.backtrack_shrink;
                continue;
            }
            y.copy_from_slice(&x);
            zy.copy_from_slice(&zx);
            momentum = 1.0;
            restarted = true;
            continue;
        }
        stalls = 0;
        restarted = false;

        let rel_change = (fx - f_new) / fx.abs().max(1.0);
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut z_prev, &mut zx);
        x.copy_from_slice(&x_new);
        zx.copy_from_slice(&z_new);
        fx = f_new;
        history.push(fx);

        if rel_change <= config.tolerance && prox_step <= config.tolerance * (1.0 + norm(&x)) {
            converged = true;
            break;
        }

        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        momentum = next_momentum;
        for j in 0..dim {
            y[j] = x[j] + beta * (x[j] - x_prev[j]);
        }
        for t in 0..rows {
            zy[t] = zx[t] + beta * (zx[t] - z_prev[t]);
        }
        lipschitz *= STEP_GROWTH;
    }

    Ok(ProxOutcome {
        theta: x,
        objective: fx,
        iterations,
        converged,
        history,
    })
}
