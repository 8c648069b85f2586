//! Trace JSON Lines format, one cascade per line:
//!
//! ```text
//! {"model":"ic","sources":[...],"steps":[[active at t=0],[newly contagious at t=1],...]}
//! ```
//!
//! IC / logistic steps are the contagious sets, CICE steps list the nodes
//! newly infected at each step, voter steps are full blue sets. Ids are
//! 0-based and ascending within each list.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CascadeError, CascadeTrace, ModelKind};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceRecord {
    model: String,
    sources: Vec<usize>,
    steps: Vec<Vec<usize>>,
}

fn to_record(trace: &CascadeTrace) -> TraceRecord {
    let steps = match trace.kind {
        ModelKind::Cice => {
            let mut out = vec![trace.steps[0].clone()];
            for w in trace.steps.windows(2) {
                out.push(
                    w[1].iter()
                        .copied()
                        .filter(|j| w[0].binary_search(j).is_err())
                        .collect(),
                );
            }
            out
        }
        _ => trace.steps.clone(),
    };
    TraceRecord {
        model: trace.kind.to_string(),
        sources: trace.sources.clone(),
        steps,
    }
}

pub fn write_traces<W: Write>(traces: &[CascadeTrace], mut out: W) -> Result<(), CascadeError> {
    for trace in traces {
        let line = serde_json::to_string(&to_record(trace))
            .map_err(|e| CascadeError::Parameter(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_traces_file(traces: &[CascadeTrace], path: &Path) -> Result<(), CascadeError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_traces(traces, &mut out)?;
    out.flush()?;
    Ok(())
}

fn ascending(ids: &[usize]) -> bool {
    ids.windows(2).all(|w| w[0] < w[1])
}

fn from_record(record: TraceRecord, line: usize, num_nodes: usize) -> Result<CascadeTrace, CascadeError> {
    let bad = |message: String| CascadeError::Parse { line, message };
    let kind: ModelKind = record.model.parse().map_err(|e: CascadeError| bad(e.to_string()))?;
    if record.steps.is_empty() {
        return Err(bad("trace has no steps".into()));
    }
    if record.steps[0] != record.sources {
        return Err(bad("first step must equal the source set".into()));
    }
    if record.sources.is_empty() {
        return Err(bad("source set is empty".into()));
    }
    for step in &record.steps {
        if !ascending(step) {
            return Err(bad("ids must be strictly ascending within a step".into()));
        }
        if let Some(&id) = step.iter().find(|&&id| id >= num_nodes) {
            return Err(bad(format!("node {id} outside {num_nodes} nodes")));
        }
    }
    let steps = match kind {
        ModelKind::Cice => {
            let mut cumulative = Vec::with_capacity(record.steps.len());
            let mut infected = vec![false; num_nodes];
            for step in &record.steps {
                for &j in step {
                    if infected[j] {
                        return Err(bad(format!("node {j} infected twice")));
                    }
                    infected[j] = true;
                }
                cumulative.push((0..num_nodes).filter(|&j| infected[j]).collect());
            }
            cumulative
        }
        ModelKind::Ic | ModelKind::Logistic => {
            let mut seen = vec![false; num_nodes];
            for step in &record.steps {
                if step.is_empty() {
                    return Err(bad("contagious sets must be nonempty".into()));
                }
                for &j in step {
                    if seen[j] {
                        return Err(bad(format!("node {j} contagious at two steps")));
                    }
                    seen[j] = true;
                }
            }
            record.steps
        }
        ModelKind::Voter => record.steps,
    };
    Ok(CascadeTrace {
        kind,
        num_nodes,
        sources: record.sources,
        steps,
    })
}

/// Reads traces. With `num_nodes = None` the node count is taken as one
/// more than the largest id in the file.
pub fn read_traces<R: BufRead>(input: R, num_nodes: Option<usize>) -> Result<Vec<CascadeTrace>, CascadeError> {
    let mut records = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line).map_err(|e| CascadeError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        records.push((line_no, record));
    }
    let m = match num_nodes {
        Some(m) => m,
        None => records
            .iter()
            .flat_map(|(_, r)| r.steps.iter().flatten())
            .max()
            .map_or(0, |&id| id + 1),
    };
    records
        .into_iter()
        .map(|(line, record)| from_record(record, line, m))
        .collect()
}

pub fn read_traces_file(path: &Path, num_nodes: Option<usize>) -> Result<Vec<CascadeTrace>, CascadeError> {
    read_traces(BufReader::new(File::open(path)?), num_nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{batch_simulate, CascadeModel};
    use crate::graph::{assign_weights, generate_watts_strogatz};

    #[test]
    fn roundtrip_all_models() {
        let t = generate_watts_strogatz(30, 4, 0.2, 1).unwrap();
        for model in [
            CascadeModel::ic(),
            CascadeModel::voter(5),
            CascadeModel::cice(0.5),
            CascadeModel::logistic(2.0),
        ] {
            let high = if model.kind == ModelKind::Ic { 0.7 } else { 1.0 };
            let g = assign_weights(&t, model.kind, 0.2, high, 2).unwrap();
            let traces = batch_simulate(&g, &model, 20, 0.1, 3).unwrap();
            let mut buf = Vec::new();
            write_traces(&traces, &mut buf).unwrap();
            let back = read_traces(buf.as_slice(), Some(30)).unwrap();
            assert_eq!(back, traces, "{}", model.kind);
        }
    }

    #[test]
    fn line_format() {
        let trace = CascadeTrace {
            kind: ModelKind::Cice,
            num_nodes: 4,
            sources: vec![1],
            steps: vec![vec![1], vec![1, 3], vec![0, 1, 3]],
        };
        let mut buf = Vec::new();
        write_traces(&[trace], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"model\":\"cice\",\"sources\":[1],\"steps\":[[1],[3],[0]]}\n"
        );
    }

    #[test]
    fn malformed_lines_are_reported() {
        let text = "{\"model\":\"ic\",\"sources\":[0],\"steps\":[[0],[1]]}\n{\"model\":\"ic\",\"sources\":[0],\"steps\":[[0],[0]]}\n";
        assert!(matches!(
            read_traces(text.as_bytes(), None),
            Err(CascadeError::Parse { line: 2, .. })
        ));
        let unknown = "{\"model\":\"lt\",\"sources\":[0],\"steps\":[[0]]}\n";
        assert!(matches!(
            read_traces(unknown.as_bytes(), None),
            Err(CascadeError::Parse { line: 1, .. })
        ));
        let inferred = read_traces(
            "{\"model\":\"voter\",\"sources\":[4],\"steps\":[[4],[2,4]]}\n".as_bytes(),
            None,
        )
        .unwrap();
        assert_eq!(inferred[0].num_nodes, 5);
    }
}
