//! Engine-agnostic workflow intermediate representation.
//!
//! A [`WorkflowGraph`] holds jobs (kept sorted by step name), directed edges,
//! the artifacts produced inside the workflow, artifacts imported from other
//! workflows, and a free-form configuration map.

mod doc;
mod math;
mod topology;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use doc::{deserialize, serialize, IR_VERSION};
pub use math::{
    critical_path_time, matrices, peak_concurrent_memory, peak_overlap, predecessor_subgraph,
    successor_subgraph, GraphMatrices, UNBOUNDED_LAYERS,
};
pub(crate) use math::{ensure_valid, predecessor_nodes, successor_nodes};
pub(crate) use topology::Topology;
pub use validate::{validate, Finding, Severity, ValidationReport, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrError {
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid workflow: {0}")]
    Structural(ValidationReport),
    #[error("unknown artifact `{0}`")]
    UnknownArtifact(String),
    #[error("unknown step `{0}`")]
    UnknownStep(String),
}

/// The kinds of storage an artifact can be declared against. Metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Parameter,
    S3,
    Oss,
    Hdfs,
    Gcs,
    Git,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 6] = [
        ArtifactKind::Parameter,
        ArtifactKind::S3,
        ArtifactKind::Oss,
        ArtifactKind::Hdfs,
        ArtifactKind::Gcs,
        ArtifactKind::Git,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::Parameter => "parameter",
            ArtifactKind::S3 => "s3",
            ArtifactKind::Oss => "oss",
            ArtifactKind::Hdfs => "hdfs",
            ArtifactKind::Gcs => "gcs",
            ArtifactKind::Git => "git",
        }
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArtifactKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArtifactKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown artifact kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub id: String,
    pub kind: ArtifactKind,
    pub size_bytes: u64,
    pub producer: String,
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareKind {
    Equal,
    NotEqual,
}

impl CompareKind {
    pub fn holds(self, actual: &str, expected: &str) -> bool {
        match self {
            CompareKind::Equal => actual == expected,
            CompareKind::NotEqual => actual != expected,
        }
    }

    pub fn operator(self) -> &'static str {
        match self {
            CompareKind::Equal => "==",
            CompareKind::NotEqual => "!=",
        }
    }
}

/// Guard attached to a step: the step runs only if the named source step's
/// result compares as requested against `value`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub source: String,
    pub kind: CompareKind,
    pub value: String,
}

/// Recursion annotation: the step re-runs while its own result satisfies the
/// comparison, at most `max_iterations` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub kind: CompareKind,
    pub value: String,
    pub max_iterations: u32,
}

pub const DEFAULT_MAX_ITERATIONS: u32 = 100;

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

fn default_cpu() -> f64 {
    JobSpec::DEFAULT_CPU_CORES
}

fn default_memory() -> u64 {
    JobSpec::DEFAULT_MEMORY_BYTES
}

fn default_runtime() -> f64 {
    JobSpec::DEFAULT_RUNTIME_SECONDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub step_name: String,
    pub image: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
    #[serde(default = "default_cpu")]
    pub cpu_cores: f64,
    #[serde(default = "default_memory")]
    pub memory_bytes: u64,
    #[serde(default = "default_runtime")]
    pub runtime_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    /// Script payload for steps built from source text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
    /// Replica count per role for distributed jobs; empty means one pod.
    #[serde(default, skip_serializing_if = "is_default")]
    pub replicas: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
    #[serde(default, rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_spec: Option<LoopSpec>,
}

impl JobSpec {
    pub const DEFAULT_CPU_CORES: f64 = 1.0;
    pub const DEFAULT_MEMORY_BYTES: u64 = 1 << 30;
    pub const DEFAULT_RUNTIME_SECONDS: f64 = 1.0;

    pub fn new(step_name: impl Into<String>, image: impl Into<String>) -> Self {
        JobSpec {
            step_name: step_name.into(),
            image: image.into(),
            command: Vec::new(),
            args: Vec::new(),
            cpu_cores: Self::DEFAULT_CPU_CORES,
            memory_bytes: Self::DEFAULT_MEMORY_BYTES,
            runtime_seconds: Self::DEFAULT_RUNTIME_SECONDS,
            inputs: Vec::new(),
            outputs: Vec::new(),
            script: None,
            replicas: BTreeMap::new(),
            condition: None,
            loop_spec: None,
        }
    }

    pub fn with_runtime(mut self, seconds: f64) -> Self {
        self.runtime_seconds = seconds;
        self
    }

    pub fn with_memory(mut self, bytes: u64) -> Self {
        self.memory_bytes = bytes;
        self
    }

    pub fn with_cpu(mut self, cores: f64) -> Self {
        self.cpu_cores = cores;
        self
    }

    pub fn with_inputs<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.inputs = ids.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_outputs<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.outputs = ids.into_iter().map(Into::into).collect();
        self
    }

    /// Pods this step occupies: the sum of role replicas, or one.
    pub fn pod_count(&self) -> u64 {
        if self.replicas.is_empty() {
            1
        } else {
            self.replicas.values().map(|&r| u64::from(r)).sum()
        }
    }

    /// Compute cost in core-seconds.
    pub fn compute_cost(&self) -> f64 {
        self.cpu_cores * self.runtime_seconds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

impl Edge {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Edge {
            from: from.into(),
            to: to.into(),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkflowGraph {
    name: String,
    jobs: Vec<JobSpec>,
    edges: BTreeSet<Edge>,
    artifacts: BTreeMap<String, ArtifactMeta>,
    imports: BTreeMap<String, ArtifactMeta>,
    config: BTreeMap<String, String>,
}

impl WorkflowGraph {
    pub fn new(name: impl Into<String>) -> Self {
        WorkflowGraph {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Jobs in step-name order. Duplicates, if any were inserted, are adjacent.
    pub fn jobs(&self) -> &[JobSpec] {
        &self.jobs
    }

    pub fn job(&self, step: &str) -> Option<&JobSpec> {
        let i = self.jobs.partition_point(|j| j.step_name.as_str() < step);
        self.jobs.get(i).filter(|j| j.step_name == step)
    }

    pub fn job_mut(&mut self, step: &str) -> Option<&mut JobSpec> {
        let i = self.jobs.partition_point(|j| j.step_name.as_str() < step);
        self.jobs.get_mut(i).filter(|j| j.step_name == step)
    }

    pub fn contains_job(&self, step: &str) -> bool {
        self.job(step).is_some()
    }

    pub fn add_job(&mut self, job: JobSpec) {
        let i = self.jobs.partition_point(|j| j.step_name <= job.step_name);
        self.jobs.insert(i, job);
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// Returns false if the edge was already present.
    pub fn add_edge(&mut self, from: impl Into<String>, to: impl Into<String>) -> bool {
        self.edges.insert(Edge::new(from, to))
    }

    pub fn artifacts(&self) -> &BTreeMap<String, ArtifactMeta> {
        &self.artifacts
    }

    pub fn add_artifact(&mut self, meta: ArtifactMeta) {
        self.artifacts.insert(meta.id.clone(), meta);
    }

    /// Artifacts consumed here but produced by another workflow.
    pub fn imports(&self) -> &BTreeMap<String, ArtifactMeta> {
        &self.imports
    }

    pub fn add_import(&mut self, meta: ArtifactMeta) {
        self.imports.insert(meta.id.clone(), meta);
    }

    /// Looks an artifact up among produced artifacts, then imports.
    pub fn artifact(&self, id: &str) -> Option<&ArtifactMeta> {
        self.artifacts.get(id).or_else(|| self.imports.get(id))
    }

    pub fn config(&self) -> &BTreeMap<String, String> {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.config
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    /// Induced subgraph over `steps`: kept jobs, edges among them, artifacts
    /// they produce. Inputs produced outside the set become imports.
    pub fn induced<S: AsRef<str>>(&self, steps: &BTreeSet<S>) -> WorkflowGraph
    where
        S: Ord,
    {
        let keep: BTreeSet<&str> = steps.iter().map(|s| s.as_ref()).collect();
        let mut out = WorkflowGraph::new(self.name.clone());
        out.config = self.config.clone();
        for job in self.jobs.iter().filter(|j| keep.contains(j.step_name.as_str())) {
            out.jobs.push(job.clone());
            for id in &job.inputs {
                if out.artifacts.contains_key(id) {
                    continue;
                }
                match self.artifact(id) {
                    Some(meta) if keep.contains(meta.producer.as_str()) => {}
                    Some(meta) => {
                        out.imports.insert(id.clone(), meta.clone());
                    }
                    None => {}
                }
            }
        }
        for meta in self.artifacts.values() {
            if keep.contains(meta.producer.as_str()) {
                out.artifacts.insert(meta.id.clone(), meta.clone());
            }
        }
        // an import can be shadowed by a kept producer
        let produced: Vec<String> = out.imports.keys().filter(|id| out.artifacts.contains_key(*id)).cloned().collect();
        for id in produced {
            out.imports.remove(&id);
        }
        out.edges = self
            .edges
            .iter()
            .filter(|e| keep.contains(e.from.as_str()) && keep.contains(e.to.as_str()))
            .cloned()
            .collect();
        out
    }

    /// Steps that list `artifact` among their inputs, in step-name order.
    pub fn consumers_of(&self, artifact: &str) -> Vec<&str> {
        self.jobs
            .iter()
            .filter(|j| j.inputs.iter().any(|i| i == artifact))
            .map(|j| j.step_name.as_str())
            .collect()
    }

    pub(crate) fn edges_mut(&mut self) -> &mut BTreeSet<Edge> {
        &mut self.edges
    }
}
