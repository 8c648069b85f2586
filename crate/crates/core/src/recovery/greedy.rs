//! Forward greedy parent selection.
//!
//! Starting from θ = 0, each round tries every unused candidate parent,
//! refits only its weight by a one-dimensional convex line search (the other
//! weights fixed), and keeps the candidate with the largest decrease of the
//! negative log-likelihood. Ties go to the lowest node id.

use super::objective::{ClampedLink, Design, NegLogLikelihood, SmoothLoss};
use super::{InferenceResult, RecoveryError, DEFAULT_EPS_CLAMP};
use crate::cascade::{CascadeModel, MeasurementSet, ModelKind};

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyConfig {
    pub max_parents: usize,
    /// Minimum likelihood decrease for adding a parent. `None` uses
    /// `ln(m) / n`.
    pub min_improvement: Option<f64>,
    pub eps_clamp: f64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            max_parents: usize::MAX,
            min_improvement: None,
            eps_clamp: DEFAULT_EPS_CLAMP,
        }
    }
}

// Upper end of the weight line search for unbounded models.
const UNBOUNDED_WEIGHT_CAP: f64 = 50.0;

struct LineSearch<'a> {
    link: &'a ClampedLink,
    design: &'a Design,
    rows: &'a [usize],
    z: &'a [f64],
}

impl LineSearch<'_> {
    fn value(&self, w: f64) -> f64 {
        self.rows
            .iter()
            .map(|&t| self.link.term_value(self.z[t] + w, self.design.outcomes[t]))
            .sum()
    }

    fn slope(&self, w: f64) -> f64 {
        self.rows
            .iter()
            .map(|&t| self.link.term_slope(self.z[t] + w, self.design.outcomes[t]))
            .sum()
    }

    fn slope_curvature(&self, w: f64) -> (f64, f64) {
        self.rows.iter().fold((0.0, 0.0), |(s, c), &t| {
            let (_, d1, d2) = self.link.term(self.z[t] + w, self.design.outcomes[t]);
            (s + d1, c + d2)
        })
    }

    /// Minimizer of the convex restriction on `[0, cap]`: Newton steps,
    /// falling back to bisection whenever a step leaves the bracket.
    fn minimize(&self, cap: f64) -> f64 {
        let (mut s, mut c) = self.slope_curvature(0.0);
        if s >= 0.0 {
            return 0.0;
        }
        if self.slope(cap) <= 0.0 {
            return cap;
        }
        let (mut lo, mut hi) = (0.0, cap);
        let mut w = 0.0;
        for _ in 0..100 {
            let newton = w - s / c;
            let next = if c > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let done = (next - w).abs() <= 1e-12 * (1.0 + next);
            w = next;
            if done {
                break;
            }
            (s, c) = self.slope_curvature(w);
            if s < 0.0 {
                lo = w;
            } else if s > 0.0 {
                hi = w;
            } else {
                break;
            }
            if hi - lo <= 1e-12 * (1.0 + hi) {
                break;
            }
        }
        w
    }
}

pub fn solve_greedy(
    set: &MeasurementSet,
    model: &CascadeModel,
    config: &GreedyConfig,
) -> Result<InferenceResult, RecoveryError> {
    if set.is_empty() {
        return Err(RecoveryError::EmptyMeasurements { node: set.target });
    }
    let loss = NegLogLikelihood::new(set, model, config.eps_clamp);
    let design = loss.design();
    let link = loss.link();
    let n = design.rows() as f64;
    let m = design.dim;
    let min_improvement = config
        .min_improvement
        .unwrap_or_else(|| (m.max(2) as f64).ln() / n);
    let cap = if model.kind == ModelKind::Voter {
        1.0
    } else {
        UNBOUNDED_WEIGHT_CAP
    };
    let columns = design.columns();
    let mut theta = vec![0.0; m];
    let mut selected = vec![false; m];
    let mut z = vec![0.0; design.rows()];
    let mut rounds = 0;

    while rounds < config.max_parents {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..m {
            if selected[j] || columns[j].is_empty() {
                continue;
            }
            let search = LineSearch {
                link,
                design,
                rows: &columns[j],
                z: &z,
            };
            let w = search.minimize(cap);
            if w == 0.0 {
                continue;
            }
            let gain = (search.value(0.0) - search.value(w)) / n;
            if best.is_none_or(|(_, _, g)| gain > g) {
                best = Some((j, w, gain));
            }
        }
        match best {
            Some((j, w, gain)) if gain >= min_improvement => {
                selected[j] = true;
                theta[j] = w;
                for &t in &columns[j] {
                    z[t] += w;
                }
                rounds += 1;
            }
            _ => break,
        }
    }

    let objective = loss.value_z(&z);
    Ok(InferenceResult {
        theta_hat: theta,
        iterations: rounds,
        objective,
        converged: true,
        n: set.len(),
        history: vec![objective],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn zero_budget_selects_nothing() {
        let mut set = MeasurementSet::new(2, 3);
        set.push(vec![0], true);
        let config = GreedyConfig {
            max_parents: 0,
            ..GreedyConfig::default()
        };
        let r = solve_greedy(&set, &CascadeModel::ic(), &config).unwrap();
        assert!(r.theta_hat.iter().all(|&v| v == 0.0));
        assert!(r.converged);
    }

    #[test]
    fn pure_noise_stops_early() {
        // Outcomes independent of the active sets, at the base rate of the
        // logistic link at z = 0.
        let model = CascadeModel::logistic(1.0);
        let base = model.prob(0.0);
        let mut rng = crate::seed::rng(3);
        let mut set = MeasurementSet::new(5, 6);
        for _ in 0..2000 {
            let active: Vec<usize> = (0..5).filter(|_| rng.random::<f64>() < 0.3).collect();
            set.push(active, rng.random::<f64>() < base);
        }
        let r = solve_greedy(&set, &model, &GreedyConfig::default()).unwrap();
        let support = r.theta_hat.iter().filter(|&&v| v > 0.0).count();
        assert!(support <= 1, "support {support}");
        assert!(r.converged);
    }

    #[test]
    fn picks_the_informative_parent_first() {
        let model = CascadeModel::ic();
        let mut rng = crate::seed::rng(5);
        let mut set = MeasurementSet::new(3, 4);
        for _ in 0..2000 {
            let active: Vec<usize> = (0..3).filter(|_| rng.random::<f64>() < 0.5).collect();
            let z = if active.contains(&1) { 0.9 } else { 0.0 };
            set.push(active, rng.random::<f64>() < model.prob(z));
        }
        let config = GreedyConfig {
            max_parents: 1,
            ..GreedyConfig::default()
        };
        let r = solve_greedy(&set, &model, &config).unwrap();
        assert!(r.theta_hat[1] > 0.0);
        assert_eq!(r.theta_hat.iter().filter(|&&v| v > 0.0).count(), 1);
    }
}
