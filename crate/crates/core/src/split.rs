//! Budgeted splitting of oversized workflows.
//!
//! A workflow over budget is cut into parts by a greedy depth-first walk: a
//! vertex is appended to the current candidate unless that would push the
//! candidate over budget, in which case the candidate is flushed as a part
//! and a new one starts at the vertex. The walk only descends into a vertex
//! once all of its predecessors have been placed, so parts are contiguous
//! runs of a topological order and cut edges always point to later parts.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emit::{estimate_graph_size, SizeTracker, Usage};
use crate::ir::{ensure_valid, Edge, IrError, Topology, WorkflowGraph};

pub const DEFAULT_SIZE_LIMIT: u64 = 2 * 1024 * 1024;
pub const DEFAULT_STEP_LIMIT: u64 = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error("budget limits must be positive")]
    InvalidBudget,
}

/// Three independent limits; exceeding any one puts a workflow over budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub size_bytes_limit: u64,
    pub step_limit: u64,
    pub pod_limit: Option<u64>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            size_bytes_limit: DEFAULT_SIZE_LIMIT,
            step_limit: DEFAULT_STEP_LIMIT,
            pod_limit: None,
        }
    }
}

impl Budget {
    pub fn new(size_bytes_limit: u64, step_limit: u64, pod_limit: Option<u64>) -> Result<Self, SplitError> {
        let budget = Budget {
            size_bytes_limit,
            step_limit,
            pod_limit,
        };
        budget.check()?;
        Ok(budget)
    }

    fn check(&self) -> Result<(), SplitError> {
        if self.size_bytes_limit == 0 || self.step_limit == 0 || self.pod_limit == Some(0) {
            return Err(SplitError::InvalidBudget);
        }
        Ok(())
    }

    pub fn admits(&self, usage: &Usage) -> bool {
        usage.size_bytes <= self.size_bytes_limit
            && usage.step_count <= self.step_limit
            && self.pod_limit.map_or(true, |p| usage.pod_count <= p)
    }
}

/// Size, step and pod usage of a whole graph.
pub fn budget_of(graph: &WorkflowGraph) -> Usage {
    Usage {
        size_bytes: estimate_graph_size(graph),
        step_count: graph.len() as u64,
        pod_count: graph.jobs().iter().map(|j| j.pod_count()).sum(),
    }
}

/// Usage of the subgraph induced by `steps`.
pub fn budget_of_steps<S: AsRef<str> + Ord>(graph: &WorkflowGraph, steps: &BTreeSet<S>) -> Usage {
    budget_of(&graph.induced(steps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub index: usize,
    pub graph: WorkflowGraph,
    pub usage: Usage,
    /// A lone job that exceeds the budget by itself.
    pub oversized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CutDependency {
    pub producer_part: usize,
    pub consumer_part: usize,
    pub edge: Edge,
    /// Artifacts the producer side hands to the consumer side over this edge.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub parts: Vec<Part>,
    pub dependencies: Vec<CutDependency>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestPart {
    pub index: usize,
    pub name: String,
    pub steps: Vec<String>,
    pub size_bytes: u64,
    pub step_count: u64,
    pub pod_count: u64,
    pub oversized: bool,
}

/// Serialized form of a split: `parts[]` and `dependencies[]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub parts: Vec<ManifestPart>,
    pub dependencies: Vec<CutDependency>,
}

impl SplitResult {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            parts: self
                .parts
                .iter()
                .map(|p| ManifestPart {
                    index: p.index,
                    name: p.graph.name().to_string(),
                    steps: p.graph.jobs().iter().map(|j| j.step_name.clone()).collect(),
                    size_bytes: p.usage.size_bytes,
                    step_count: p.usage.step_count,
                    pod_count: p.usage.pod_count,
                    oversized: p.oversized,
                })
                .collect(),
            dependencies: self.dependencies.clone(),
        }
    }

    pub fn manifest_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        text.push('\n');
        text
    }

    /// Index of the part holding each step.
    pub fn part_of(&self, step: &str) -> Option<usize> {
        self.parts.iter().position(|p| p.graph.contains_job(step))
    }
}

pub fn part_name(workflow: &str, index: usize) -> String {
    format!("{workflow}-part-{index}")
}

struct Walk<'a, 'g> {
    budget: &'a Budget,
    workflow: &'g str,
    tracker: SizeTracker<'g>,
    visited: Vec<bool>,
    /// Unplaced predecessors per vertex.
    remaining: Vec<usize>,
    groups: Vec<(Vec<usize>, Usage)>,
    candidate: Vec<usize>,
}

impl Walk<'_, '_> {
    fn visit(&mut self, v: usize, succ: &[Vec<usize>]) {
        self.visited[v] = true;
        if !self.candidate.is_empty() && !self.budget.admits(&self.tracker.usage_with(v)) {
            self.groups
                .push((std::mem::take(&mut self.candidate), self.tracker.usage()));
            self.tracker.reset(&part_name(self.workflow, self.groups.len()));
        }
        self.tracker.add(v);
        self.candidate.push(v);
        for &s in &succ[v] {
            self.remaining[s] -= 1;
        }
    }

    fn finish(mut self) -> Vec<(Vec<usize>, Usage)> {
        if !self.candidate.is_empty() {
            self.groups.push((self.candidate, self.tracker.usage()));
        }
        self.groups
    }
}

pub fn split(graph: &WorkflowGraph, budget: &Budget) -> Result<SplitResult, SplitError> {
    budget.check()?;
    ensure_valid(graph)?;

    let whole = budget_of(graph);
    if budget.admits(&whole) {
        return Ok(SplitResult {
            parts: vec![Part {
                index: 0,
                graph: graph.clone(),
                usage: whole,
                oversized: false,
            }],
            dependencies: Vec::new(),
        });
    }

    let topo = Topology::new(graph);
    let n = topo.len();
    let succ = topo.succ.clone();
    let remaining: Vec<usize> = topo.pred.iter().map(Vec::len).collect();
    let roots: Vec<usize> = (0..n).filter(|&v| remaining[v] == 0).collect();
    let mut walk = Walk {
        budget,
        workflow: graph.name(),
        tracker: SizeTracker::new(graph, topo, &part_name(graph.name(), 0)),
        visited: vec![false; n],
        remaining,
        groups: Vec::new(),
        candidate: Vec::new(),
    };

    for root in roots {
        if walk.visited[root] {
            continue;
        }
        walk.visit(root, &succ);
        let mut stack = vec![(root, 0usize)];
        while let Some((v, i)) = stack.last_mut() {
            let v = *v;
            if *i < succ[v].len() {
                let s = succ[v][*i];
                *i += 1;
                if walk.remaining[s] == 0 && !walk.visited[s] {
                    walk.visit(s, &succ);
                    stack.push((s, 0));
                }
            } else {
                stack.pop();
            }
        }
    }
    debug_assert!(walk.visited.iter().all(|&v| v));
    let groups = walk.finish();

    let names: Vec<&str> = graph.jobs().iter().map(|j| j.step_name.as_str()).collect();
    let mut part_index = vec![0usize; n];
    let mut parts = Vec::with_capacity(groups.len());
    for (index, (members, usage)) in groups.into_iter().enumerate() {
        let steps: BTreeSet<&str> = members.iter().map(|&v| names[v]).collect();
        for &v in &members {
            part_index[v] = index;
        }
        let mut part = graph.induced(&steps);
        part.set_name(part_name(graph.name(), index));
        parts.push(Part {
            index,
            oversized: !budget.admits(&usage),
            graph: part,
            usage,
        });
    }

    let index_of = |s: &str| names.binary_search(&s).expect("validated edge endpoint");
    let mut dependencies: Vec<CutDependency> = graph
        .edges()
        .iter()
        .filter_map(|e| {
            let (a, b) = (index_of(&e.from), index_of(&e.to));
            (part_index[a] != part_index[b]).then(|| {
                let consumer = &graph.jobs()[b];
                let mut artifacts: Vec<String> = graph.jobs()[a]
                    .outputs
                    .iter()
                    .filter(|o| consumer.inputs.contains(o))
                    .cloned()
                    .collect();
                artifacts.sort();
                artifacts.dedup();
                CutDependency {
                    producer_part: part_index[a],
                    consumer_part: part_index[b],
                    edge: e.clone(),
                    artifacts,
                }
            })
        })
        .collect();
    dependencies.sort();

    Ok(SplitResult { parts, dependencies })
}
