//! Artifact importance scoring.
//!
//! * reconstruction cost: over the predecessor neighbourhood `G_p` of the
//!   artifact's producer, `sum_ij A_ij * (w_i + d_i * d_j)` with `w_i` the
//!   job's core-seconds and `d` total degree inside `G_p`;
//! * reuse value: over the successor neighbourhood `G_s`, excluding the
//!   producer, `sum_i (r_i / k_i) * (|Z_pi| + 1)` where `k_i` is the hop
//!   distance from the producer, `r_i` marks jobs that transitively consume
//!   the artifact and have not started yet, and `Z = diag(d) - A` on `G_s`;
//! * caching cost: size as a fraction of cache capacity, clamped to [0, 1];
//! * importance: `alpha * ln(1 + l) + beta * f^2 - exp(-v)`.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{CacheConfig, CacheError};
use crate::ir::{predecessor_nodes, successor_nodes, IrError, Topology, WorkflowGraph};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRecord {
    pub artifact: String,
    pub reconstruction: f64,
    pub reuse: f64,
    pub caching_cost: f64,
    pub score: f64,
    pub size_bytes: u64,
}

pub fn importance(l: f64, f: f64, v: f64, config: &CacheConfig) -> f64 {
    config.alpha * l.ln_1p() + config.beta * f * f - (-v).exp()
}

pub fn caching_cost(size_bytes: u64, config: &CacheConfig) -> f64 {
    (size_bytes as f64 / config.capacity_bytes as f64).clamp(0.0, 1.0)
}

pub fn reconstruction_cost(
    graph: &WorkflowGraph,
    artifact: &str,
    cached: &BTreeSet<String>,
    config: &CacheConfig,
) -> Result<f64, CacheError> {
    let topo = Topology::new(graph);
    reconstruction_with(graph, &topo, artifact, cached, config)
}

pub(crate) fn reconstruction_with(
    graph: &WorkflowGraph,
    topo: &Topology<'_>,
    artifact: &str,
    cached: &BTreeSet<String>,
    config: &CacheConfig,
) -> Result<f64, CacheError> {
    let nodes = predecessor_nodes(graph, topo, artifact, config.n_layers, cached)?;
    let mut inside = vec![false; topo.len()];
    for &(v, _) in &nodes {
        inside[v] = true;
    }
    let degree = |v: usize| {
        (topo.succ[v].iter().filter(|&&s| inside[s]).count()
            + topo.pred[v].iter().filter(|&&p| inside[p]).count()) as f64
    };
    let mut members: Vec<usize> = nodes.iter().map(|&(v, _)| v).collect();
    members.sort_unstable();
    let mut total = 0.0;
    for &i in &members {
        let w = graph.jobs()[i].compute_cost();
        let di = degree(i);
        for &j in topo.succ[i].iter().filter(|&&j| inside[j]) {
            total += w + di * degree(j);
        }
    }
    Ok(total)
}

pub fn reuse_value(graph: &WorkflowGraph, artifact: &str, config: &CacheConfig) -> Result<f64, CacheError> {
    let topo = Topology::new(graph);
    reuse_with(graph, &topo, artifact, &BTreeSet::new(), config)
}

pub(crate) fn reuse_with(
    graph: &WorkflowGraph,
    topo: &Topology<'_>,
    artifact: &str,
    started: &BTreeSet<String>,
    config: &CacheConfig,
) -> Result<f64, CacheError> {
    let nodes = successor_nodes(graph, topo, artifact, config.n_layers)?;
    let producer = nodes[0].0;
    let reuses = transitive_consumers(graph, topo, artifact, started);
    let mut total = 0.0;
    for &(i, hops) in nodes.iter().skip(1) {
        if !reuses[i] || started.contains(&graph.jobs()[i].step_name) {
            continue;
        }
        let zeta = if topo.succ[producer].binary_search(&i).is_ok() { 1.0 } else { 0.0 };
        total += (zeta + 1.0) / hops as f64;
    }
    Ok(total)
}

/// Jobs that consume `artifact`, or an artifact derived from it through a
/// chain of consumers. Outputs of started jobs no longer depend on it.
fn transitive_consumers(
    graph: &WorkflowGraph,
    topo: &Topology<'_>,
    artifact: &str,
    started: &BTreeSet<String>,
) -> Vec<bool> {
    let order = topo.topo_order().unwrap_or_else(|| (0..topo.len()).collect());
    let mut tainted: BTreeSet<&str> = BTreeSet::from([artifact]);
    let mut consumes = vec![false; topo.len()];
    for v in order {
        let job = &graph.jobs()[v];
        if job.inputs.iter().any(|i| tainted.contains(i.as_str())) {
            consumes[v] = true;
            if started.contains(&job.step_name) {
                continue;
            }
            tainted.extend(job.outputs.iter().map(String::as_str));
        }
    }
    consumes
}

pub(crate) fn score_with(
    graph: &WorkflowGraph,
    topo: &Topology<'_>,
    artifact: &str,
    cached: &BTreeSet<String>,
    started: &BTreeSet<String>,
    config: &CacheConfig,
) -> Result<ScoreRecord, CacheError> {
    let meta = graph
        .artifacts()
        .get(artifact)
        .ok_or_else(|| IrError::UnknownArtifact(artifact.to_string()))?;
    let l = reconstruction_with(graph, topo, artifact, cached, config)?;
    let f = reuse_with(graph, topo, artifact, started, config)?;
    let v = caching_cost(meta.size_bytes, config);
    Ok(ScoreRecord {
        artifact: artifact.to_string(),
        reconstruction: l,
        reuse: f,
        caching_cost: v,
        score: importance(l, f, v, config),
        size_bytes: meta.size_bytes,
    })
}

/// Full score record for `artifact` given the currently cached set.
pub fn score_artifact(
    graph: &WorkflowGraph,
    artifact: &str,
    cached: &BTreeSet<String>,
    config: &CacheConfig,
) -> Result<ScoreRecord, CacheError> {
    score_with(graph, &Topology::new(graph), artifact, cached, &BTreeSet::new(), config)
}
