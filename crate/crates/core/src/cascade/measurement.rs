use super::{CascadeError, CascadeTrace, ModelKind};

/// One observation for a target node: the active set `x` at a step where the
/// target was susceptible, and whether the target was active at the next
/// step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measurement {
    /// Sorted ids of the active nodes (the support of the indicator `x`).
    pub active: Vec<usize>,
    pub outcome: bool,
}

/// The measurements of one target node, possibly pooled over many traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementSet {
    pub target: usize,
    pub num_nodes: usize,
    pub measurements: Vec<Measurement>,
}

impl MeasurementSet {
    pub fn new(target: usize, num_nodes: usize) -> Self {
        Self {
            target,
            num_nodes,
            measurements: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn push(&mut self, active: Vec<usize>, outcome: bool) {
        self.measurements.push(Measurement { active, outcome });
    }

    /// Keeps only the first `n` measurements.
    pub fn truncate(&mut self, n: usize) {
        self.measurements.truncate(n);
    }
}

/// Extracts the measurements of `target` from one trace.
///
/// * IC / logistic: one pair per step while the target is susceptible,
///   ending with the step at which it becomes contagious. The last step of a
///   trace is followed by an (observed) empty step.
/// * CICE: one pair per step with a successor while the target is uninfected.
/// * Voter: one pair per step with a successor.
pub fn extract_measurements(trace: &CascadeTrace, target: usize) -> Result<MeasurementSet, CascadeError> {
    if target >= trace.num_nodes {
        return Err(CascadeError::Parameter(format!(
            "node {target} outside {} nodes",
            trace.num_nodes
        )));
    }
    let mut set = MeasurementSet::new(target, trace.num_nodes);
    let len = trace.len();
    match trace.kind {
        ModelKind::Ic | ModelKind::Logistic => {
            for t in 0..len {
                if trace.is_active(t, target) {
                    break;
                }
                let outcome = t + 1 < len && trace.is_active(t + 1, target);
                set.push(trace.steps[t].clone(), outcome);
                if outcome {
                    break;
                }
            }
        }
        ModelKind::Cice => {
            for t in 0..len.saturating_sub(1) {
                if trace.is_active(t, target) {
                    break;
                }
                let outcome = trace.is_active(t + 1, target);
                set.push(trace.steps[t].clone(), outcome);
                if outcome {
                    break;
                }
            }
        }
        ModelKind::Voter => {
            for t in 0..len.saturating_sub(1) {
                set.push(trace.steps[t].clone(), trace.is_active(t + 1, target));
            }
        }
    }
    Ok(set)
}

/// Concatenates the measurements of `target` over `traces`, in trace order.
pub fn pool_measurements(
    traces: &[CascadeTrace],
    target: usize,
    num_nodes: usize,
) -> Result<MeasurementSet, CascadeError> {
    let mut pooled = MeasurementSet::new(target, num_nodes);
    if target >= num_nodes {
        return Err(CascadeError::Parameter(format!(
            "node {target} outside {num_nodes} nodes"
        )));
    }
    if let Some(first) = traces.first() {
        if let Some(other) = traces.iter().find(|t| t.kind != first.kind) {
            return Err(CascadeError::Domain(format!(
                "cannot pool {} and {} traces",
                first.kind, other.kind
            )));
        }
    }
    for trace in traces {
        if trace.num_nodes != num_nodes {
            return Err(CascadeError::Domain(format!(
                "trace on {} nodes pooled into a {num_nodes}-node set",
                trace.num_nodes
            )));
        }
        pooled
            .measurements
            .extend(extract_measurements(trace, target)?.measurements);
    }
    Ok(pooled)
}
