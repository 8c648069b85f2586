use std::collections::BTreeSet;

use super::EvaluationError;

pub type EdgeSet = BTreeSet<(usize, usize)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Edge precision, recall and F1 of `estimated` against `truth`.
///
/// An empty estimate has precision 1 when the true edge set is also empty
/// and 0 otherwise; recall of an empty truth is 1. F1 is 0 whenever
/// precision and recall are both 0.
pub fn precision_recall_f1(estimated: &EdgeSet, truth: &EdgeSet) -> EdgeMetrics {
    let hits = estimated.intersection(truth).count() as f64;
    let precision = if estimated.is_empty() {
        if truth.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        hits / estimated.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits / truth.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    EdgeMetrics { precision, recall, f1 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2Error {
    /// Frobenius norm of `Θ̂ - Θ*`.
    pub total: f64,
    /// `‖θ̂_j - θ*_j‖₂` for every column `j`.
    pub per_column: Vec<f64>,
}

/// ℓ2 error between two weight matrices given as columns.
pub fn l2_error(theta_hat: &[Vec<f64>], theta_star: &[Vec<f64>]) -> Result<L2Error, EvaluationError> {
    if theta_hat.len() != theta_star.len() {
        return Err(EvaluationError::Parameter(format!(
            "{} estimated columns against {} true columns",
            theta_hat.len(),
            theta_star.len()
        )));
    }
    let mut per_column = Vec::with_capacity(theta_hat.len());
    for (j, (a, b)) in theta_hat.iter().zip(theta_star).enumerate() {
        if a.len() != b.len() {
            return Err(EvaluationError::Parameter(format!(
                "column {j} has length {} against {}",
                a.len(),
                b.len()
            )));
        }
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        per_column.push(sq.sqrt());
    }
    let total = per_column.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(L2Error { total, per_column })
}
