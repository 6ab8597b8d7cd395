//! Graph mathematics over a workflow: adjacency/degree/Laplacian matrices,
//! critical-path time, ASAP peak memory and the layered neighbourhood
//! subgraphs used by artifact scoring.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{validate, IrError, Topology, WorkflowGraph};

/// Layer count that never truncates a traversal.
pub const UNBOUNDED_LAYERS: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphMatrices {
    /// Row/column order: step names, sorted.
    pub order: Vec<String>,
    pub adjacency: Vec<Vec<i64>>,
    /// Total degree, in + out.
    pub degrees: Vec<i64>,
    /// `diag(degrees) - adjacency`.
    pub laplacian: Vec<Vec<i64>>,
}

impl GraphMatrices {
    pub fn position(&self, step: &str) -> Option<usize> {
        self.order.iter().position(|s| s == step)
    }
}

pub(crate) fn ensure_valid(graph: &WorkflowGraph) -> Result<(), IrError> {
    let report = validate(graph);
    if report.is_valid() {
        Ok(())
    } else {
        Err(IrError::Structural(report))
    }
}

pub fn matrices(graph: &WorkflowGraph) -> Result<GraphMatrices, IrError> {
    ensure_valid(graph)?;
    Ok(matrices_unchecked(graph))
}

pub(crate) fn matrices_unchecked(graph: &WorkflowGraph) -> GraphMatrices {
    let topo = Topology::new(graph);
    let n = topo.len();
    let mut adjacency = vec![vec![0i64; n]; n];
    for (i, succ) in topo.succ.iter().enumerate() {
        for &j in succ {
            adjacency[i][j] = 1;
        }
    }
    let degrees: Vec<i64> = (0..n)
        .map(|i| (topo.succ[i].len() + topo.pred[i].len()) as i64)
        .collect();
    let mut laplacian: Vec<Vec<i64>> = adjacency.iter().map(|row| row.iter().map(|a| -a).collect()).collect();
    for (i, row) in laplacian.iter_mut().enumerate() {
        row[i] += degrees[i];
    }
    GraphMatrices {
        order: topo.names.iter().map(|s| s.to_string()).collect(),
        adjacency,
        degrees,
        laplacian,
    }
}

/// Longest source-to-sink path, weighted by job runtime. Zero when empty.
pub fn critical_path_time(graph: &WorkflowGraph) -> Result<f64, IrError> {
    ensure_valid(graph)?;
    let (start, _) = asap_schedule(graph);
    Ok(graph
        .jobs()
        .iter()
        .zip(&start)
        .map(|(j, s)| s + j.runtime_seconds)
        .fold(0.0, f64::max))
}

/// Start times under the as-soon-as-possible schedule with unlimited
/// parallelism, indexed like `graph.jobs()`, plus the topological order used.
pub(crate) fn asap_schedule(graph: &WorkflowGraph) -> (Vec<f64>, Vec<usize>) {
    let topo = Topology::new(graph);
    let order = topo.topo_order().expect("validated graph is acyclic");
    let mut start = vec![0.0f64; topo.len()];
    for &v in &order {
        let finish = start[v] + graph.jobs()[v].runtime_seconds;
        for &s in &topo.succ[v] {
            if finish > start[s] {
                start[s] = finish;
            }
        }
    }
    (start, order)
}

/// Peak of summed memory over the ASAP schedule. Zero when empty.
pub fn peak_concurrent_memory(graph: &WorkflowGraph) -> Result<u64, IrError> {
    ensure_valid(graph)?;
    let (start, _) = asap_schedule(graph);
    let intervals: Vec<(f64, f64, u64)> = graph
        .jobs()
        .iter()
        .zip(&start)
        .map(|(j, &s)| (s, s + j.runtime_seconds, j.memory_bytes))
        .collect();
    Ok(peak_overlap(&intervals))
}

/// Maximum total weight of half-open intervals `[start, end)` alive at one
/// instant. Zero-length intervals count at their start instant only.
pub fn peak_overlap(intervals: &[(f64, f64, u64)]) -> u64 {
    // (time, phase, delta): ends before starts at equal times, then the
    // instant is measured, then zero-length intervals are retired.
    let mut events: Vec<(f64, u8, i128)> = Vec::with_capacity(intervals.len() * 2);
    for &(s, e, w) in intervals {
        let w = i128::from(w);
        events.push((s, 1, w));
        events.push((e, if e > s { 0 } else { 2 }, -w));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut live: i128 = 0;
    let mut peak: i128 = 0;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        let mut measured = false;
        while i < events.len() && events[i].0 == t {
            let (_, phase, delta) = events[i];
            if phase == 2 && !measured {
                peak = peak.max(live);
                measured = true;
            }
            live += delta;
            i += 1;
        }
        if !measured {
            peak = peak.max(live);
        }
    }
    peak as u64
}

fn producer_index<'g>(
    graph: &'g WorkflowGraph,
    topo: &Topology<'g>,
    artifact: &str,
) -> Result<usize, IrError> {
    let meta = graph
        .artifacts()
        .get(artifact)
        .ok_or_else(|| IrError::UnknownArtifact(artifact.to_string()))?;
    topo.index
        .get(meta.producer.as_str())
        .copied()
        .ok_or_else(|| IrError::UnknownStep(meta.producer.clone()))
}

/// Reverse layered neighbourhood of an artifact's producer: nodes and their
/// hop distance. A reached job whose outputs are all in `cached` is kept but
/// not expanded further.
pub(crate) fn predecessor_nodes(
    graph: &WorkflowGraph,
    topo: &Topology<'_>,
    artifact: &str,
    n_layers: usize,
    cached: &BTreeSet<String>,
) -> Result<Vec<(usize, usize)>, IrError> {
    let start = producer_index(graph, topo, artifact)?;
    let jobs = graph.jobs();
    Ok(topo.layered_bfs(start, n_layers, false, |v| {
        let outs = &jobs[v].outputs;
        outs.is_empty() || !outs.iter().all(|o| cached.contains(o))
    }))
}

pub(crate) fn successor_nodes(
    graph: &WorkflowGraph,
    topo: &Topology<'_>,
    artifact: &str,
    n_layers: usize,
) -> Result<Vec<(usize, usize)>, IrError> {
    let start = producer_index(graph, topo, artifact)?;
    Ok(topo.layered_bfs(start, n_layers, true, |_| true))
}

fn induced_by_index(graph: &WorkflowGraph, topo: &Topology<'_>, nodes: &[(usize, usize)]) -> WorkflowGraph {
    let keep: BTreeSet<&str> = nodes.iter().map(|(v, _)| topo.names[*v]).collect();
    graph.induced(&keep)
}

/// G_p: the producer of `artifact` and up to `n_layers` levels of its
/// predecessors, truncated at jobs whose outputs are all cached.
pub fn predecessor_subgraph(
    graph: &WorkflowGraph,
    artifact: &str,
    n_layers: usize,
    cached: &BTreeSet<String>,
) -> Result<WorkflowGraph, IrError> {
    let topo = Topology::new(graph);
    let nodes = predecessor_nodes(graph, &topo, artifact, n_layers, cached)?;
    Ok(induced_by_index(graph, &topo, &nodes))
}

/// G_s: the producer of `artifact` and up to `n_layers` levels of its
/// successors. Never truncated by caching.
pub fn successor_subgraph(
    graph: &WorkflowGraph,
    artifact: &str,
    n_layers: usize,
) -> Result<WorkflowGraph, IrError> {
    let topo = Topology::new(graph);
    let nodes = successor_nodes(graph, &topo, artifact, n_layers)?;
    Ok(induced_by_index(graph, &topo, &nodes))
}
