use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{p_to_theta, Graph, GraphError, GraphTopology};
use crate::cascade::ModelKind;
use crate::seed;

fn check_range(low: f64, high: f64) -> Result<(), GraphError> {
    if !(low.is_finite() && high.is_finite() && 0.0 <= low && low <= high) {
        return Err(GraphError::Parameter(format!(
            "weight range [{low}, {high}] must satisfy 0 <= low <= high"
        )));
    }
    Ok(())
}

// Uniform draw in [low, high], redrawn while it lands on exactly zero.
fn positive_uniform(rng: &mut ChaCha8Rng, low: f64, high: f64) -> Result<f64, GraphError> {
    if high <= 0.0 {
        return Err(GraphError::Parameter(
            "weight range must contain positive values".into(),
        ));
    }
    loop {
        let v = low + (high - low) * rng.random::<f64>();
        if v > 0.0 {
            return Ok(v);
        }
    }
}

/// Samples edge weights for a topology.
///
/// * IC: `p ~ U[low, high]` per edge, stored as `Θ = log(1 / (1 - p))`.
/// * Voter: raw `U[low, high]` draws, then each node's incoming weights are
///   normalized to sum to one.
/// * CICE / logistic: raw `U[low, high]` draws stored as Θ.
///
/// Edges are visited in ascending `(src, dst)` order, one draw each.
pub fn assign_weights(
    topology: &GraphTopology,
    model: ModelKind,
    low: f64,
    high: f64,
    seed: u64,
) -> Result<Graph, GraphError> {
    check_range(low, high)?;
    if model == ModelKind::Ic && high >= 1.0 {
        return Err(GraphError::Parameter(format!(
            "IC infection probabilities need high < 1, got {high}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut edges = Vec::with_capacity(topology.num_edges());
    for (src, dst) in topology.edges() {
        let raw = positive_uniform(&mut rng, low, high)?;
        let weight = match model {
            ModelKind::Ic => p_to_theta(raw)?,
            _ => raw,
        };
        edges.push((src, dst, weight));
    }
    if model == ModelKind::Voter {
        let mut sums = vec![0.0; topology.num_nodes()];
        for &(_, dst, w) in &edges {
            sums[dst] += w;
        }
        for edge in &mut edges {
            edge.2 /= sums[edge.1];
        }
    }
    Graph::from_weighted_edges(topology.num_nodes(), model, edges)
}

/// Adds weak edges to an IC graph: every absent ordered pair `(i, j)`,
/// `i != j`, becomes an edge with probability `prob`, with `p ~ U[low, high]`
/// stored as Θ. Existing edges are kept unchanged.
pub fn add_weak_edges(
    graph: &Graph,
    prob: f64,
    low: f64,
    high: f64,
    seed: u64,
) -> Result<Graph, GraphError> {
    if graph.model() != ModelKind::Ic {
        return Err(GraphError::Domain(format!(
            "weak edges are defined for IC graphs, got {}",
            graph.model()
        )));
    }
    if !(0.0..=1.0).contains(&prob) {
        return Err(GraphError::Parameter(format!(
            "edge probability {prob} outside [0, 1]"
        )));
    }
    check_range(low, high)?;
    if high >= 1.0 {
        return Err(GraphError::Parameter(format!(
            "IC infection probabilities need high < 1, got {high}"
        )));
    }
    let m = graph.num_nodes();
    let mut rng = seed::rng(seed);
    let mut edges: Vec<(usize, usize, f64)> = graph.edges().collect();
    for src in 0..m {
        for dst in 0..m {
            if src == dst || graph.weight(src, dst) > 0.0 {
                continue;
            }
            if rng.random::<f64>() < prob {
                let p = positive_uniform(&mut rng, low, high)?;
                edges.push((src, dst, p_to_theta(p)?));
            }
        }
    }
    Graph::from_weighted_edges(m, ModelKind::Ic, edges)
}
