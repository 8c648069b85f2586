use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CascadeError, CascadeModel, ModelKind, STEP_CAP_PER_NODE};
use crate::graph::Graph;
use crate::seed;

/// One simulated cascade.
///
/// `steps[t]` is the sorted id list of the active set `X^t`: the contagious
/// nodes for IC / logistic cascades, all infected nodes for CICE and the blue
/// nodes for the voter model. `steps[0]` is the source set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeTrace {
    pub kind: ModelKind,
    pub num_nodes: usize,
    pub sources: Vec<usize>,
    pub steps: Vec<Vec<usize>>,
}

impl CascadeTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Whether `node` is in the active set at step `t`.
    pub fn is_active(&self, t: usize, node: usize) -> bool {
        self.steps[t].binary_search(&node).is_ok()
    }
}

/// Each node is a source independently with probability `p_init`; an empty
/// draw is redrawn.
pub fn draw_sources(m: usize, p_init: f64, seed: u64) -> Result<Vec<usize>, CascadeError> {
    if !(p_init > 0.0 && p_init <= 1.0) {
        return Err(CascadeError::Parameter(format!(
            "source probability {p_init} outside (0, 1]"
        )));
    }
    if m == 0 {
        return Err(CascadeError::Parameter("graph has no nodes".into()));
    }
    let mut rng = seed::rng(seed);
    loop {
        let sources: Vec<usize> = (0..m).filter(|_| rng.random::<f64>() < p_init).collect();
        if !sources.is_empty() {
            return Ok(sources);
        }
    }
}

/// Simulates one cascade from `sources`.
///
/// Every transition uses one uniform draw per candidate node, taken in
/// ascending node order, so outcomes within a step are independent given
/// `X^t` and the whole trace is a function of `seed`.
pub fn simulate(
    graph: &Graph,
    model: &CascadeModel,
    sources: &[usize],
    seed: u64,
) -> Result<CascadeTrace, CascadeError> {
    model.validate()?;
    graph.validate_for(model.kind)?;
    let m = graph.num_nodes();
    let mut sources = sources.to_vec();
    sources.sort_unstable();
    sources.dedup();
    if sources.is_empty() {
        return Err(CascadeError::Parameter("source set is empty".into()));
    }
    if let Some(&bad) = sources.iter().find(|&&s| s >= m) {
        return Err(CascadeError::Parameter(format!(
            "source {bad} outside {m} nodes"
        )));
    }
    let mut rng = seed::rng(seed);
    let cap = STEP_CAP_PER_NODE * m;
    let steps = match model.kind {
        ModelKind::Ic | ModelKind::Logistic => run_with_immunity(graph, model, &sources, cap, &mut rng)?,
        ModelKind::Cice => run_cice(graph, model, &sources, cap, &mut rng)?,
        ModelKind::Voter => run_voter(graph, model, &sources, cap, &mut rng)?,
    };
    Ok(CascadeTrace {
        kind: model.kind,
        num_nodes: m,
        sources,
        steps,
    })
}

fn check_cap(len: usize, cap: usize, m: usize) -> Result<(), CascadeError> {
    if len > cap {
        Err(CascadeError::StepCap { cap, num_nodes: m })
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Susceptible,
    Contagious,
    Immune,
}

fn run_with_immunity(
    graph: &Graph,
    model: &CascadeModel,
    sources: &[usize],
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>, CascadeError> {
    let m = graph.num_nodes();
    let limit = model.horizon.map_or(usize::MAX, |h| h + 1);
    let mut state = vec![State::Susceptible; m];
    let mut z = vec![0.0; m];
    let mut touched = Vec::new();
    for &s in sources {
        state[s] = State::Contagious;
    }
    let mut steps = vec![sources.to_vec()];
    loop {
        check_cap(steps.len(), cap, m)?;
        if steps.len() >= limit {
            break;
        }
        let current = steps.last().expect("nonempty");
        for &i in current {
            for &(j, w) in graph.outgoing(i) {
                if state[j] == State::Susceptible {
                    if z[j] == 0.0 {
                        touched.push(j);
                    }
                    z[j] += w;
                }
            }
        }
        let mut next = Vec::new();
        if model.kind == ModelKind::Logistic {
            // Every susceptible node can activate, even without active parents.
            for j in 0..m {
                if state[j] == State::Susceptible && rng.random::<f64>() < model.prob(z[j]) {
                    next.push(j);
                }
            }
        } else {
            touched.sort_unstable();
            for &j in &touched {
                if rng.random::<f64>() < model.prob(z[j]) {
                    next.push(j);
                }
            }
        }
        for &j in &touched {
            z[j] = 0.0;
        }
        touched.clear();
        for &i in current {
            state[i] = State::Immune;
        }
        if next.is_empty() {
            break;
        }
        for &j in &next {
            state[j] = State::Contagious;
        }
        steps.push(next);
    }
    Ok(steps)
}

fn run_cice(
    graph: &Graph,
    model: &CascadeModel,
    sources: &[usize],
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>, CascadeError> {
    let m = graph.num_nodes();
    let limit = model.horizon.map_or(usize::MAX, |h| h + 1);
    let mut infected = vec![false; m];
    let mut z = vec![0.0; m];
    let mut newly = sources.to_vec();
    let mut steps = vec![sources.to_vec()];
    for &s in sources {
        infected[s] = true;
    }
    loop {
        check_cap(steps.len(), cap, m)?;
        for &i in &newly {
            for &(j, w) in graph.outgoing(i) {
                z[j] += w;
            }
        }
        let candidates: Vec<usize> = (0..m).filter(|&j| !infected[j] && z[j] > 0.0).collect();
        if candidates.is_empty() || steps.len() >= limit {
            break;
        }
        newly = candidates
            .into_iter()
            .filter(|&j| rng.random::<f64>() < model.prob(z[j]))
            .collect();
        for &j in &newly {
            infected[j] = true;
        }
        steps.push((0..m).filter(|&j| infected[j]).collect());
    }
    Ok(steps)
}

fn run_voter(
    graph: &Graph,
    model: &CascadeModel,
    sources: &[usize],
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>, CascadeError> {
    let m = graph.num_nodes();
    let horizon = model.voter_horizon();
    check_cap(horizon + 1, cap, m)?;
    let mut blue = vec![false; m];
    for &s in sources {
        blue[s] = true;
    }
    let mut steps = vec![sources.to_vec()];
    for _ in 0..horizon {
        let count = steps.last().expect("nonempty").len();
        if count == 0 || count == m {
            break;
        }
        let next: Vec<bool> = (0..m)
            .map(|j| {
                let column = graph.incoming(j);
                if column.is_empty() {
                    // No neighbor to copy from: the color never changes.
                    return blue[j];
                }
                let z: f64 = column.iter().filter(|&&(i, _)| blue[i]).map(|&(_, w)| w).sum();
                rng.random::<f64>() < z
            })
            .collect();
        blue = next;
        steps.push((0..m).filter(|&j| blue[j]).collect());
    }
    Ok(steps)
}

/// Simulates `num_cascades` independent cascades. Cascade `k` draws its
/// sources and transitions from seeds derived from `(seed, k)`, so a batch
/// of `n` cascades is a prefix of any larger batch with the same seed.
pub fn batch_simulate(
    graph: &Graph,
    model: &CascadeModel,
    num_cascades: usize,
    p_init: f64,
    seed: u64,
) -> Result<Vec<CascadeTrace>, CascadeError> {
    if num_cascades == 0 {
        return Err(CascadeError::Parameter("need at least one cascade".into()));
    }
    (0..num_cascades as u64)
        .into_par_iter()
        .map(|k| {
            let sources = draw_sources(
                graph.num_nodes(),
                p_init,
                seed::derive(seed, &[k, seed::tag::SOURCES]),
            )?;
            simulate(
                graph,
                model,
                &sources,
                seed::derive(seed, &[k, seed::tag::TRANSITIONS]),
            )
        })
        .collect()
}
