//! Canonical JSON form of the IR.
//!
//! Top-level keys: `artifacts`, `config`, `edges`, `imports` (omitted when
//! empty), `ir_version`, `jobs`, `name`. Object keys are emitted sorted,
//! arrays are sorted by step name / artifact id / edge, and floats use the
//! shortest representation that round-trips, so output is byte-stable.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ArtifactMeta, Edge, IrError, JobSpec, WorkflowGraph};

pub const IR_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    ir_version: u32,
    name: String,
    #[serde(default)]
    jobs: Vec<JobSpec>,
    #[serde(default)]
    edges: Vec<Edge>,
    #[serde(default)]
    artifacts: Vec<ArtifactMeta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    imports: Vec<ArtifactMeta>,
    #[serde(default)]
    config: BTreeMap<String, String>,
}

pub fn serialize(graph: &WorkflowGraph) -> String {
    let doc = Document {
        ir_version: IR_VERSION,
        name: graph.name().to_string(),
        jobs: graph.jobs().to_vec(),
        edges: graph.edges().iter().cloned().collect(),
        artifacts: graph.artifacts().values().cloned().collect(),
        imports: graph.imports().values().cloned().collect(),
        config: graph.config().clone(),
    };
    let mut value = serde_json::to_value(&doc).expect("IR document is always representable");
    value.sort_all_objects();
    let mut text = serde_json::to_string_pretty(&value).expect("JSON value serializes");
    text.push('\n');
    text
}

pub fn deserialize(text: &str) -> Result<WorkflowGraph, IrError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| IrError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if doc.ir_version != IR_VERSION {
        return Err(IrError::Parse {
            path: "ir_version".into(),
            message: format!("unsupported version {} (expected {IR_VERSION})", doc.ir_version),
        });
    }
    let mut graph = WorkflowGraph::new(doc.name);
    let steps: BTreeSet<String> = doc.jobs.iter().map(|j| j.step_name.clone()).collect();
    for job in doc.jobs {
        graph.add_job(job);
    }
    for (i, edge) in doc.edges.into_iter().enumerate() {
        for end in [&edge.from, &edge.to] {
            if !steps.contains(end) {
                return Err(IrError::Parse {
                    path: format!("edges[{i}]"),
                    message: format!("edge {edge} references missing step `{end}`"),
                });
            }
        }
        graph.edges_mut().insert(edge);
    }
    for meta in doc.artifacts {
        graph.add_artifact(meta);
    }
    for meta in doc.imports {
        graph.add_import(meta);
    }
    *graph.config_mut() = doc.config;
    Ok(graph)
}
