//! Brute-force reference computations, written against the IR only.

use std::collections::{BTreeMap, BTreeSet};

use wfopt_core::ir::WorkflowGraph;

pub struct Dense {
    pub names: Vec<String>,
    pub adj: Vec<Vec<bool>>,
}

impl Dense {
    pub fn new(g: &WorkflowGraph) -> Self {
        let names: Vec<String> = g.jobs().iter().map(|j| j.step_name.clone()).collect();
        let pos: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let n = names.len();
        let mut adj = vec![vec![false; n]; n];
        for e in g.edges() {
            adj[pos[e.from.as_str()]][pos[e.to.as_str()]] = true;
        }
        Dense { names, adj }
    }

    fn len(&self) -> usize {
        self.names.len()
    }

    fn index(&self, step: &str) -> usize {
        self.names.iter().position(|n| n == step).expect("known step")
    }
}

/// Longest runtime-weighted path by enumerating every path.
pub fn critical_path(g: &WorkflowGraph) -> f64 {
    let d = Dense::new(g);
    let rt: Vec<f64> = g.jobs().iter().map(|j| j.runtime_seconds).collect();
    fn walk(d: &Dense, rt: &[f64], v: usize, acc: f64, best: &mut f64) {
        let acc = acc + rt[v];
        *best = best.max(acc);
        for w in 0..d.len() {
            if d.adj[v][w] {
                walk(d, rt, w, acc, best);
            }
        }
    }
    let mut best = 0.0;
    for v in 0..d.len() {
        walk(&d, &rt, v, 0.0, &mut best);
    }
    best
}

/// All-pairs hop distances by Floyd-Warshall; `u64::MAX` when unreachable.
fn hops(d: &Dense, allowed_mid: &dyn Fn(usize) -> bool) -> Vec<Vec<u64>> {
    let n = d.len();
    let inf = u64::MAX;
    let mut dist = vec![vec![inf; n]; n];
    for i in 0..n {
        dist[i][i] = 0;
        for j in 0..n {
            if d.adj[i][j] {
                dist[i][j] = 1;
            }
        }
    }
    for k in (0..n).filter(|&k| allowed_mid(k)) {
        for i in 0..n {
            for j in 0..n {
                if dist[i][k] != inf && dist[k][j] != inf && dist[i][k] + dist[k][j] < dist[i][j] {
                    dist[i][j] = dist[i][k] + dist[k][j];
                }
            }
        }
    }
    dist
}

/// Reconstruction cost: members are jobs with a path to the producer of at
/// most `layers` hops whose intermediate jobs each have an output that is
/// not cached. Sum over member pairs of `A[i][j] * (w_i + d_i * d_j)`, with
/// degrees counted inside the member set.
pub fn reconstruction(g: &WorkflowGraph, artifact: &str, cached: &BTreeSet<String>, layers: usize) -> f64 {
    let d = Dense::new(g);
    let jobs = g.jobs();
    let p = d.index(&g.artifacts()[artifact].producer);
    let expandable = |k: usize| {
        let outs = &jobs[k].outputs;
        k == p || outs.is_empty() || outs.iter().any(|o| !cached.contains(o))
    };
    let dist = hops(&d, &expandable);
    let n = d.len();
    let member: Vec<bool> = (0..n).map(|i| dist[i][p] != u64::MAX && dist[i][p] <= layers as u64).collect();
    let deg: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| member[i] && member[j] && (d.adj[i][j] || d.adj[j][i]))
                .count() as f64
        })
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if member[i] && member[j] && d.adj[i][j] {
                total += jobs[i].cpu_cores * jobs[i].runtime_seconds + deg[i] * deg[j];
            }
        }
    }
    total
}

/// Jobs that read `artifact` directly or read something derived from it,
/// found by iterating to a fixpoint.
fn derived_readers(g: &WorkflowGraph, artifact: &str) -> BTreeSet<String> {
    let mut tainted: BTreeSet<String> = BTreeSet::from([artifact.to_string()]);
    let mut readers = BTreeSet::new();
    loop {
        let before = (tainted.len(), readers.len());
        for j in g.jobs() {
            if j.inputs.iter().any(|i| tainted.contains(i)) {
                readers.insert(j.step_name.clone());
                tainted.extend(j.outputs.iter().cloned());
            }
        }
        if (tainted.len(), readers.len()) == before {
            return readers;
        }
    }
}

/// Reuse value: sum over successors within `layers` hops that read the
/// artifact (possibly indirectly) of `(direct + 1) / hops`.
pub fn reuse(g: &WorkflowGraph, artifact: &str, layers: usize) -> f64 {
    let d = Dense::new(g);
    let p = d.index(&g.artifacts()[artifact].producer);
    let dist = hops(&d, &|_| true);
    let readers = derived_readers(g, artifact);
    let mut total = 0.0;
    for i in 0..d.len() {
        let h = dist[p][i];
        if i == p || h == u64::MAX || h > layers as u64 || !readers.contains(&d.names[i]) {
            continue;
        }
        let direct = if d.adj[p][i] { 1.0 } else { 0.0 };
        total += (direct + 1.0) / h as f64;
    }
    total
}

/// `exp(x)` by its Taylor series.
pub fn exp_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= x / k as f64;
        sum += term;
    }
    sum
}

/// True when the step-level graph given as `(from, to)` pairs has no cycle.
pub fn acyclic(nodes: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; nodes];
    let mut out = vec![Vec::new(); nodes];
    for &(a, b) in edges {
        indeg[b] += 1;
        out[a].push(b);
    }
    let mut ready: Vec<usize> = (0..nodes).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for &w in &out[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(w);
            }
        }
    }
    seen == nodes
}
