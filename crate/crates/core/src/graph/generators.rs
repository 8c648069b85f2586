//! Synthetic topology generators.
//!
//! The undirected generators (Barabási–Albert, Watts–Strogatz, Holme–Kim)
//! follow the usual constructions and convert to directed graphs by doubling
//! every edge. The Kronecker generator samples directed edges directly.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GraphError, GraphTopology};
use crate::seed;

/// Initiator used when none is given; a common core-periphery choice.
pub const KRONECKER_DEFAULT_INITIATOR: [[f64; 2]; 2] = [[0.9, 0.5], [0.5, 0.3]];

/// Attachment count `k` whose Barabási–Albert (or Holme–Kim) graph on `m`
/// nodes has the directed edge count `2 k (m - k)` closest to `target`.
pub fn ba_attachment_for_edges(m: usize, target: usize) -> Result<usize, GraphError> {
    if m < 2 {
        return Err(GraphError::Parameter(format!("need at least 2 nodes, got {m}")));
    }
    Ok((1..m)
        .min_by_key(|&k| (2 * k * (m - k)).abs_diff(target))
        .expect("m >= 2"))
}

/// Even ring degree `k` whose Watts–Strogatz graph on `m` nodes has the
/// directed edge count `m k` closest to `target` (ties go to the smaller k).
pub fn ws_neighbors_for_edges(m: usize, target: usize) -> Result<usize, GraphError> {
    if m < 3 {
        return Err(GraphError::Parameter(format!("need at least 3 nodes, got {m}")));
    }
    Ok((1..=(m - 1) / 2)
        .map(|half| 2 * half)
        .min_by_key(|&k| (m * k).abs_diff(target))
        .expect("m >= 3"))
}

struct Undirected {
    adj: Vec<BTreeSet<usize>>,
}

impl Undirected {
    fn new(m: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); m],
        }
    }

    fn add(&mut self, a: usize, b: usize) -> bool {
        if a == b || self.adj[a].contains(&b) {
            return false;
        }
        self.adj[a].insert(b);
        self.adj[b].insert(a);
        true
    }

    fn remove(&mut self, a: usize, b: usize) {
        self.adj[a].remove(&b);
        self.adj[b].remove(&a);
    }

    fn has(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    fn into_topology(self) -> GraphTopology {
        let m = self.adj.len();
        let pairs: Vec<(usize, usize)> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect();
        GraphTopology::from_undirected(m, pairs).expect("generator edges are valid")
    }
}

// Draws `k` distinct elements from `pool` (with multiplicity weighting).
fn random_subset(pool: &[usize], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut chosen = BTreeSet::new();
    while chosen.len() < k {
        chosen.insert(*pool.choose(rng).expect("nonempty pool"));
    }
    chosen.into_iter().collect()
}

/// Preferential attachment: starting from `k` isolated nodes, each new node
/// attaches to `k` distinct existing nodes chosen with probability
/// proportional to their degree. Produces `k (m - k)` undirected edges.
pub fn generate_barabasi_albert(m: usize, k: usize, seed: u64) -> Result<GraphTopology, GraphError> {
    generate_holme_kim_inner(m, k, 0.0, seed, "barabasi-albert")
}

/// Holme–Kim powerlaw-cluster graph: preferential attachment where, after
/// each attachment, the next edge closes a triangle with probability
/// `p_triad` when possible.
pub fn generate_holme_kim(
    m: usize,
    k: usize,
    p_triad: f64,
    seed: u64,
) -> Result<GraphTopology, GraphError> {
    if !(0.0..=1.0).contains(&p_triad) {
        return Err(GraphError::Parameter(format!(
            "triad probability {p_triad} outside [0, 1]"
        )));
    }
    generate_holme_kim_inner(m, k, p_triad, seed, "holme-kim")
}

fn generate_holme_kim_inner(
    m: usize,
    k: usize,
    p_triad: f64,
    seed: u64,
    name: &str,
) -> Result<GraphTopology, GraphError> {
    if k < 1 || k >= m {
        return Err(GraphError::Parameter(format!(
            "{name} requires 1 <= k < m, got k={k}, m={m}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut graph = Undirected::new(m);
    let mut repeated: Vec<usize> = (0..k).collect();
    for source in k..m {
        let mut targets = if source == k {
            (0..k).collect()
        } else {
            random_subset(&repeated, k, &mut rng)
        };
        // Targets are consumed from the back; reverse keeps ascending use.
        targets.reverse();
        let mut target = targets.pop().expect("k >= 1");
        graph.add(source, target);
        repeated.push(target);
        let mut count = 1;
        while count < k {
            if p_triad > 0.0 && rng.random::<f64>() < p_triad {
                let neighborhood: Vec<usize> = graph.adj[target]
                    .iter()
                    .copied()
                    .filter(|&nbr| nbr != source && !graph.has(source, nbr))
                    .collect();
                if let Some(&nbr) = neighborhood.choose(&mut rng) {
                    graph.add(source, nbr);
                    repeated.push(nbr);
                    count += 1;
                    continue;
                }
            }
            // Pop the next unused preferential target; skip ones already
            // joined through a triad step.
            loop {
                target = targets.pop().expect("enough distinct targets");
                if !graph.has(source, target) {
                    break;
                }
            }
            graph.add(source, target);
            repeated.push(target);
            count += 1;
        }
        repeated.extend(std::iter::repeat_n(source, k));
    }
    Ok(graph.into_topology())
}

/// Small-world graph: ring lattice where each node is joined to its `k`
/// nearest neighbors (`k / 2` on each side), then every lattice edge is
/// rewired to a uniformly chosen endpoint with probability `beta`.
pub fn generate_watts_strogatz(
    m: usize,
    k: usize,
    beta: f64,
    seed: u64,
) -> Result<GraphTopology, GraphError> {
    if k % 2 != 0 {
        return Err(GraphError::Parameter(format!(
            "watts-strogatz ring degree k must be even, got {k}"
        )));
    }
    if k >= m {
        return Err(GraphError::Parameter(format!(
            "watts-strogatz requires k < m, got k={k}, m={m}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(GraphError::Parameter(format!(
            "rewiring probability {beta} outside [0, 1]"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut graph = Undirected::new(m);
    for j in 1..=k / 2 {
        for u in 0..m {
            graph.add(u, (u + j) % m);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..m {
            if rng.random::<f64>() >= beta {
                continue;
            }
            let v = (u + j) % m;
            if !graph.has(u, v) || graph.adj[u].len() >= m - 1 {
                continue;
            }
            let mut w = rng.random_range(0..m);
            while w == u || graph.has(u, w) {
                w = rng.random_range(0..m);
            }
            graph.remove(u, v);
            graph.add(u, w);
        }
    }
    Ok(graph.into_topology())
}

/// Stochastic Kronecker graph on `2^power` nodes. Each edge is placed by
/// descending `power` levels of the initiator, picking a quadrant with
/// probability proportional to its entry, until `target_edges` distinct
/// non-loop edges exist.
pub fn generate_kronecker(
    initiator: [[f64; 2]; 2],
    power: u32,
    target_edges: usize,
    seed: u64,
) -> Result<GraphTopology, GraphError> {
    if power == 0 || power > 20 {
        return Err(GraphError::Parameter(format!(
            "kronecker power must be in 1..=20, got {power}"
        )));
    }
    let entries = [initiator[0][0], initiator[0][1], initiator[1][0], initiator[1][1]];
    if entries.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
        return Err(GraphError::Parameter(
            "initiator entries must lie in [0, 1]".into(),
        ));
    }
    let m = 1usize << power;
    let positive = entries.iter().filter(|&&e| e > 0.0).count() as u64;
    let diagonal = [entries[0], entries[3]].iter().filter(|&&e| e > 0.0).count() as u64;
    let reachable = positive
        .checked_pow(power)
        .and_then(|all| all.checked_sub(diagonal.pow(power)))
        .unwrap_or(u64::MAX);
    if target_edges as u64 > reachable {
        return Err(GraphError::Parameter(format!(
            "cannot place {target_edges} distinct edges; the initiator reaches only {reachable} off-diagonal cells"
        )));
    }
    let total: f64 = entries.iter().sum();
    let mut rng = seed::rng(seed);
    let mut edges = BTreeSet::new();
    let max_draws = 1000 * target_edges as u64 + 1_000_000;
    let mut draws = 0u64;
    while edges.len() < target_edges {
        draws += 1;
        if draws > max_draws {
            return Err(GraphError::Parameter(format!(
                "gave up after {max_draws} draws with {} of {target_edges} edges placed",
                edges.len()
            )));
        }
        let (mut src, mut dst) = (0usize, 0usize);
        for _ in 0..power {
            let mut u = rng.random::<f64>() * total;
            let mut quadrant = 3;
            for (q, &e) in entries.iter().enumerate() {
                if u < e {
                    quadrant = q;
                    break;
                }
                u -= e;
            }
            // Floating leftovers may land past the last positive entry.
            while entries[quadrant] == 0.0 {
                quadrant -= 1;
            }
            src = 2 * src + quadrant / 2;
            dst = 2 * dst + quadrant % 2;
        }
        if src != dst {
            edges.insert((src, dst));
        }
    }
    GraphTopology::from_edges(m, edges)
}
