//! Graph TSV format:
//!
//! ```text
//! # glc-graph v1 model=<ic|voter|cice|logistic> m=<int>
//! src<TAB>dst<TAB>theta_weight
//! ```
//!
//! Weights are printed with 17 significant digits so that reading a file
//! back yields the same `f64` values and rewriting it yields the same text.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Graph, GraphError};
use crate::cascade::ModelKind;

const MAGIC: &str = "# glc-graph v1";

pub fn write_graph<W: Write>(graph: &Graph, mut out: W) -> Result<(), GraphError> {
    writeln!(out, "{MAGIC} model={} m={}", graph.model(), graph.num_nodes())?;
    for (src, dst, w) in graph.edges() {
        writeln!(out, "{src}\t{dst}\t{w:.16e}")?;
    }
    Ok(())
}

pub fn write_graph_file(graph: &Graph, path: &Path) -> Result<(), GraphError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_graph(graph, &mut out)?;
    out.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(ModelKind, usize), GraphError> {
    let bad = |message: String| GraphError::Parse { line: 1, message };
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| bad(format!("expected header starting with '{MAGIC}'")))?;
    let mut model = None;
    let mut m = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("model", v)) => {
                model = Some(v.parse::<ModelKind>().map_err(|e| bad(e.to_string()))?)
            }
            Some(("m", v)) => {
                m = Some(
                    v.parse::<usize>()
                        .map_err(|_| bad(format!("invalid node count '{v}'")))?,
                )
            }
            _ => return Err(bad(format!("unexpected header field '{field}'"))),
        }
    }
    match (model, m) {
        (Some(model), Some(m)) => Ok((model, m)),
        _ => Err(bad("header must carry model= and m=".into())),
    }
}

pub fn read_graph<R: BufRead>(input: R) -> Result<Graph, GraphError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(GraphError::Parse {
        line: 1,
        message: "empty file".into(),
    })??;
    let (model, m) = parse_header(header.trim_end())?;
    let mut edges = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| GraphError::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let src: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("invalid source id '{}'", fields[0])))?;
        let dst: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("invalid target id '{}'", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("invalid weight '{}'", fields[2])))?;
        if src >= m || dst >= m {
            return Err(bad(format!("edge ({src}, {dst}) outside {m} nodes")));
        }
        if src == dst {
            return Err(bad(format!("self-loop on node {src}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(bad(format!("weight {w} is not strictly positive")));
        }
        if !seen.insert((src, dst)) {
            return Err(bad(format!("duplicate edge ({src}, {dst})")));
        }
        edges.push((src, dst, w));
    }
    Graph::from_weighted_edges(m, model, edges)
}

pub fn read_graph_file(path: &Path) -> Result<Graph, GraphError> {
    read_graph(BufReader::new(File::open(path)?))
}
