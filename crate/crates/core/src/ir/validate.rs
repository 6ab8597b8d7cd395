use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::{Edge, WorkflowGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Info,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateStep { step: String },
    DanglingEdge { from: String, to: String },
    /// Members of one strongly connected component, sorted.
    Cycle { steps: Vec<String> },
    InvalidJob { step: String, reason: String },
    UnknownArtifact { step: String, artifact: String },
    OrphanArtifact { artifact: String, producer: String },
    ProducerMismatch { artifact: String, step: String },
    MissingDataEdge { artifact: String, producer: String, consumer: String },
    UnknownConditionSource { step: String, source: String },
    UnconsumedArtifact { artifact: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateStep { step } => write!(f, "duplicate step name `{step}`"),
            Violation::DanglingEdge { from, to } => {
                write!(f, "edge {from} -> {to} references a missing step")
            }
            Violation::Cycle { steps } => write!(f, "cycle among steps {{{}}}", steps.join(", ")),
            Violation::InvalidJob { step, reason } => write!(f, "step `{step}`: {reason}"),
            Violation::UnknownArtifact { step, artifact } => {
                write!(f, "step `{step}` references unknown artifact `{artifact}`")
            }
            Violation::OrphanArtifact { artifact, producer } => {
                write!(f, "artifact `{artifact}` names missing producer `{producer}`")
            }
            Violation::ProducerMismatch { artifact, step } => write!(
                f,
                "step `{step}` outputs artifact `{artifact}` but is not its producer"
            ),
            Violation::MissingDataEdge {
                artifact,
                producer,
                consumer,
            } => write!(
                f,
                "artifact `{artifact}` flows {producer} -> {consumer} without an edge"
            ),
            Violation::UnknownConditionSource { step, source } => {
                write!(f, "step `{step}` is conditioned on missing step `{source}`")
            }
            Violation::UnconsumedArtifact { artifact } => {
                write!(f, "artifact `{artifact}` is never consumed")
            }
        }
    }
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::UnconsumedArtifact { .. } => Severity::Info,
            _ => Severity::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Finding {
    pub severity: Severity,
    #[serde(flatten)]
    pub violation: Violation,
}

/// Findings sorted by severity, then by violation. Valid iff no errors.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
            .map(|f| &f.violation)
    }

    pub fn infos(&self) -> impl Iterator<Item = &Violation> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Info)
            .map(|f| &f.violation)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.errors().map(ToString::to_string).collect();
        f.write_str(&lines.join("; "))
    }
}

pub fn validate(graph: &WorkflowGraph) -> ValidationReport {
    let mut found: BTreeSet<Violation> = BTreeSet::new();

    let mut seen = BTreeSet::new();
    for job in graph.jobs() {
        if !seen.insert(job.step_name.as_str()) {
            found.insert(Violation::DuplicateStep {
                step: job.step_name.clone(),
            });
        }
        let mut bad = |reason: &str| {
            found.insert(Violation::InvalidJob {
                step: job.step_name.clone(),
                reason: reason.to_string(),
            });
        };
        if !(job.cpu_cores > 0.0) || !job.cpu_cores.is_finite() {
            bad("cpu_cores must be positive");
        }
        if job.memory_bytes == 0 {
            bad("memory_bytes must be positive");
        }
        if !(job.runtime_seconds >= 0.0) || !job.runtime_seconds.is_finite() {
            bad("runtime_seconds must be nonnegative");
        }
        if job.inputs.iter().any(|i| job.outputs.contains(i)) {
            bad("inputs and outputs overlap");
        }
        if job.replicas.values().any(|&r| r == 0) {
            bad("every role needs at least one replica");
        }
        if let Some(lp) = &job.loop_spec {
            if lp.max_iterations == 0 {
                bad("loop bound must be at least one");
            }
        }
    }

    for e in graph.edges() {
        if !seen.contains(e.from.as_str()) || !seen.contains(e.to.as_str()) {
            found.insert(Violation::DanglingEdge {
                from: e.from.clone(),
                to: e.to.clone(),
            });
        }
    }

    for steps in cycles(graph, &seen) {
        found.insert(Violation::Cycle { steps });
    }

    let mut consumed = BTreeSet::new();
    for job in graph.jobs() {
        for id in &job.inputs {
            consumed.insert(id.as_str());
            match graph.artifact(id) {
                None => {
                    found.insert(Violation::UnknownArtifact {
                        step: job.step_name.clone(),
                        artifact: id.clone(),
                    });
                }
                Some(meta) if graph.artifacts().contains_key(id) => {
                    let edge = Edge::new(meta.producer.clone(), job.step_name.clone());
                    if seen.contains(meta.producer.as_str()) && !graph.edges().contains(&edge) {
                        found.insert(Violation::MissingDataEdge {
                            artifact: id.clone(),
                            producer: meta.producer.clone(),
                            consumer: job.step_name.clone(),
                        });
                    }
                }
                Some(_) => {}
            }
        }
        for id in &job.outputs {
            match graph.artifacts().get(id) {
                None => {
                    found.insert(Violation::UnknownArtifact {
                        step: job.step_name.clone(),
                        artifact: id.clone(),
                    });
                }
                Some(meta) if meta.producer != job.step_name => {
                    found.insert(Violation::ProducerMismatch {
                        artifact: id.clone(),
                        step: job.step_name.clone(),
                    });
                }
                Some(_) => {}
            }
        }
        if let Some(cond) = &job.condition {
            if !seen.contains(cond.source.as_str()) {
                found.insert(Violation::UnknownConditionSource {
                    step: job.step_name.clone(),
                    source: cond.source.clone(),
                });
            }
        }
    }

    let mut producers: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for job in graph.jobs() {
        for id in &job.outputs {
            producers.entry(id).or_default().push(&job.step_name);
        }
    }
    for meta in graph.artifacts().values() {
        if !seen.contains(meta.producer.as_str()) {
            found.insert(Violation::OrphanArtifact {
                artifact: meta.id.clone(),
                producer: meta.producer.clone(),
            });
        }
        if !consumed.contains(meta.id.as_str()) {
            found.insert(Violation::UnconsumedArtifact {
                artifact: meta.id.clone(),
            });
        }
    }

    let mut findings: Vec<Finding> = found
        .into_iter()
        .map(|violation| Finding {
            severity: violation.severity(),
            violation,
        })
        .collect();
    findings.sort();
    ValidationReport { findings }
}

/// Strongly connected components with more than one member, plus self-loops.
fn cycles(graph: &WorkflowGraph, known: &BTreeSet<&str>) -> Vec<Vec<String>> {
    let mut g: DiGraph<&str, ()> = DiGraph::new();
    let mut ix = BTreeMap::new();
    for name in known {
        ix.insert(*name, g.add_node(*name));
    }
    let mut self_loops = Vec::new();
    for e in graph.edges() {
        if let (Some(&a), Some(&b)) = (ix.get(e.from.as_str()), ix.get(e.to.as_str())) {
            if a == b {
                self_loops.push(vec![e.from.clone()]);
            } else {
                g.add_edge(a, b, ());
            }
        }
    }
    let mut out: Vec<Vec<String>> = tarjan_scc(&g)
        .into_iter()
        .filter(|c| c.len() > 1)
        .map(|c| {
            let mut names: Vec<String> = c.iter().map(|n| g[*n].to_string()).collect();
            names.sort();
            names
        })
        .collect();
    out.extend(self_loops);
    out.sort();
    out
}
