//! Directed weighted graphs and the parameter transform of the independent
//! cascade model.
//!
//! Weights are always stored as GLC weights Θ: for the independent cascade
//! model an infection probability `p` is kept as `Θ = log(1 / (1 - p))`, and
//! [`theta_to_p`] gives the probability view back. Column `j` of Θ holds the
//! incoming weights of node `j`.

mod generators;
mod io;
mod weights;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::cascade::ModelKind;

pub use generators::{
    ba_attachment_for_edges, generate_barabasi_albert, generate_holme_kim, generate_kronecker,
    generate_watts_strogatz, ws_neighbors_for_edges, KRONECKER_DEFAULT_INITIATOR,
};
pub use io::{read_graph, read_graph_file, write_graph, write_graph_file};
pub use weights::{add_weak_edges, assign_weights};

/// Tolerance on the incoming-weight sum of a voter node.
pub const VOTER_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("node {node} out of range for a graph with {num_nodes} nodes")]
    InvalidNode { node: usize, num_nodes: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Converts an infection probability to its GLC weight `log(1 / (1 - p))`.
pub fn p_to_theta(p: f64) -> Result<f64, GraphError> {
    if !(0.0..1.0).contains(&p) {
        return Err(GraphError::Domain(format!(
            "infection probability {p} outside [0, 1)"
        )));
    }
    Ok(-(-p).ln_1p())
}

/// Inverse of [`p_to_theta`]: `p = 1 - exp(-theta)`.
pub fn theta_to_p(theta: f64) -> f64 {
    -(-theta).exp_m1()
}

/// Unweighted directed edge set without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTopology {
    num_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl GraphTopology {
    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            edges: BTreeSet::new(),
        }
    }

    /// Builds a topology from directed edges. Duplicates collapse.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut topology = Self::empty(num_nodes);
        for (src, dst) in edges {
            topology.insert(src, dst)?;
        }
        Ok(topology)
    }

    /// Builds a directed topology from undirected pairs by emitting both
    /// directions of every pair.
    pub fn from_undirected<I>(num_nodes: usize, pairs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut topology = Self::empty(num_nodes);
        for (a, b) in pairs {
            topology.insert(a, b)?;
            topology.insert(b, a)?;
        }
        Ok(topology)
    }

    fn insert(&mut self, src: usize, dst: usize) -> Result<(), GraphError> {
        for node in [src, dst] {
            if node >= self.num_nodes {
                return Err(GraphError::InvalidNode {
                    node,
                    num_nodes: self.num_nodes,
                });
            }
        }
        if src == dst {
            return Err(GraphError::Parameter(format!("self-loop on node {src}")));
        }
        self.edges.insert((src, dst));
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in ascending `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains(&self, src: usize, dst: usize) -> bool {
        self.edges.contains(&(src, dst))
    }

    /// Number of edges ending at each node.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(_, dst) in &self.edges {
            deg[dst] += 1;
        }
        deg
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(src, _) in &self.edges {
            deg[src] += 1;
        }
        deg
    }
}

/// Directed graph with strictly positive GLC weights.
///
/// Structural invariants (no self-loops, no duplicate edges, finite positive
/// weights) are checked on construction. Model-specific constraints such as
/// the voter normalization are checked by [`Graph::validate_for`].
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    model: ModelKind,
    // incoming[j] = (src, weight) sorted by src
    incoming: Vec<Vec<(usize, f64)>>,
    // outgoing[i] = (dst, weight) sorted by dst
    outgoing: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    pub fn from_weighted_edges<I>(
        num_nodes: usize,
        model: ModelKind,
        edges: I,
    ) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut sorted: Vec<(usize, usize, f64)> = edges.into_iter().collect();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut incoming = vec![Vec::new(); num_nodes];
        let mut outgoing = vec![Vec::new(); num_nodes];
        let mut last = None;
        for (src, dst, weight) in sorted {
            for node in [src, dst] {
                if node >= num_nodes {
                    return Err(GraphError::InvalidNode { node, num_nodes });
                }
            }
            if src == dst {
                return Err(GraphError::Parameter(format!("self-loop on node {src}")));
            }
            if last == Some((src, dst)) {
                return Err(GraphError::Parameter(format!(
                    "duplicate edge ({src}, {dst})"
                )));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(GraphError::Domain(format!(
                    "edge ({src}, {dst}) has non-positive or non-finite weight {weight}"
                )));
            }
            last = Some((src, dst));
            outgoing[src].push((dst, weight));
            incoming[dst].push((src, weight));
        }
        for column in &mut incoming {
            column.sort_by_key(|&(src, _)| src);
        }
        Ok(Self {
            num_nodes,
            model,
            incoming,
            outgoing,
        })
    }

    pub fn empty(num_nodes: usize, model: ModelKind) -> Self {
        Self {
            num_nodes,
            model,
            incoming: vec![Vec::new(); num_nodes],
            outgoing: vec![Vec::new(); num_nodes],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn num_edges(&self) -> usize {
        self.outgoing.iter().map(Vec::len).sum()
    }

    /// Weighted edges in ascending `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.outgoing
            .iter()
            .enumerate()
            .flat_map(|(src, out)| out.iter().map(move |&(dst, w)| (src, dst, w)))
    }

    pub fn incoming(&self, node: usize) -> &[(usize, f64)] {
        &self.incoming[node]
    }

    pub fn outgoing(&self, node: usize) -> &[(usize, f64)] {
        &self.outgoing[node]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.incoming[node].len()
    }

    pub fn weight(&self, src: usize, dst: usize) -> f64 {
        self.incoming
            .get(dst)
            .and_then(|col| {
                col.binary_search_by_key(&src, |&(s, _)| s)
                    .ok()
                    .map(|k| col[k].1)
            })
            .unwrap_or(0.0)
    }

    /// Dense incoming-weight vector θ_j of node `j` (length `num_nodes`).
    pub fn column(&self, node: usize) -> Result<Vec<f64>, GraphError> {
        if node >= self.num_nodes {
            return Err(GraphError::InvalidNode {
                node,
                num_nodes: self.num_nodes,
            });
        }
        let mut theta = vec![0.0; self.num_nodes];
        for &(src, w) in &self.incoming[node] {
            theta[src] = w;
        }
        Ok(theta)
    }

    /// All dense columns, `columns[j][i] = Θ_{i,j}`.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.num_nodes)
            .map(|j| self.column(j).expect("node in range"))
            .collect()
    }

    pub fn topology(&self) -> GraphTopology {
        GraphTopology {
            num_nodes: self.num_nodes,
            edges: self.edges().map(|(s, d, _)| (s, d)).collect(),
        }
    }

    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges().map(|(s, d, _)| (s, d)).collect()
    }

    /// Checks that the weights are admissible for simulating `model`: the
    /// graph carries the same model tag and, for the voter model, every
    /// incoming-weight column sums to at most one.
    pub fn validate_for(&self, model: ModelKind) -> Result<(), GraphError> {
        if self.model != model {
            return Err(GraphError::Domain(format!(
                "graph weights are {} weights, cascade model is {}",
                self.model, model
            )));
        }
        if model == ModelKind::Voter {
            for (node, column) in self.incoming.iter().enumerate() {
                let sum: f64 = column.iter().map(|&(_, w)| w).sum();
                if sum > 1.0 + VOTER_SUM_TOLERANCE {
                    return Err(GraphError::Domain(format!(
                        "voter weights into node {node} sum to {sum} > 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn transform_closed_forms() {
        assert!((p_to_theta(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(p_to_theta(0.0).unwrap(), 0.0);
        assert!((theta_to_p(p_to_theta(0.3).unwrap()) - 0.3).abs() < 1e-12);
        assert!(matches!(p_to_theta(1.0), Err(GraphError::Domain(_))));
        assert!(p_to_theta(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn transform_roundtrip(p in 0.0f64..(1.0 - 1e-9)) {
            let back = theta_to_p(p_to_theta(p).unwrap());
            prop_assert!((back - p).abs() <= 1e-12);
        }

        #[test]
        fn theta_error_dominates_probability_error(
            pairs in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 1..30)
        ) {
            let theta_err: f64 = pairs.iter().map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let p_err: f64 = pairs
                .iter()
                .map(|(a, b)| (theta_to_p(*a) - theta_to_p(*b)).powi(2))
                .sum::<f64>()
                .sqrt();
            prop_assert!(theta_err + 1e-12 >= p_err);
        }
    }

    #[test]
    fn columns_are_dense_incoming_vectors() {
        let empty = Graph::empty(3, ModelKind::Ic);
        assert_eq!(empty.column(1).unwrap(), vec![0.0; 3]);

        let g = Graph::from_weighted_edges(3, ModelKind::Ic, [(0, 2, 0.4)]).unwrap();
        assert_eq!(g.column(2).unwrap(), vec![0.4, 0.0, 0.0]);
        assert_eq!(g.column(0).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            g.column(3),
            Err(GraphError::InvalidNode { node: 3, .. })
        ));
    }

    #[test]
    fn structural_invariants_are_enforced() {
        assert!(Graph::from_weighted_edges(2, ModelKind::Ic, [(0, 0, 0.1)]).is_err());
        assert!(Graph::from_weighted_edges(2, ModelKind::Ic, [(0, 1, 0.0)]).is_err());
        assert!(
            Graph::from_weighted_edges(2, ModelKind::Ic, [(0, 1, 0.1), (0, 1, 0.2)]).is_err()
        );
        assert!(GraphTopology::from_edges(2, [(1, 1)]).is_err());
        let t = GraphTopology::from_undirected(3, [(0, 1)]).unwrap();
        assert_eq!(t.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn voter_validation_rejects_oversized_columns() {
        let g = Graph::from_weighted_edges(3, ModelKind::Voter, [(0, 2, 0.7), (1, 2, 0.6)])
            .unwrap();
        assert!(g.validate_for(ModelKind::Voter).is_err());
        assert!(g.validate_for(ModelKind::Ic).is_err());
    }
}
