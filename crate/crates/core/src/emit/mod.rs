//! Backend document emission. Only the Argo backend ships; other engines
//! plug in through [`Backend`].

mod argo;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::ir::{self, IrError, WorkflowGraph};
use crate::split::SplitResult;

pub use argo::Usage;
pub(crate) use argo::SizeTracker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Argo,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Argo => f.write_str("argo"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedDocument {
    pub backend: BackendKind,
    pub name: String,
    pub text: String,
    pub size_bytes: u64,
}

pub trait Backend {
    fn kind(&self) -> BackendKind;
    fn emit(&self, graph: &WorkflowGraph) -> Result<EmittedDocument, IrError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ArgoBackend;

impl Backend for ArgoBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Argo
    }

    fn emit(&self, graph: &WorkflowGraph) -> Result<EmittedDocument, IrError> {
        emit_argo(graph)
    }
}

pub fn emit_argo(graph: &WorkflowGraph) -> Result<EmittedDocument, IrError> {
    ir::ensure_valid(graph)?;
    let text = argo::render(graph);
    Ok(EmittedDocument {
        backend: BackendKind::Argo,
        name: graph.name().to_string(),
        size_bytes: text.len() as u64,
        text,
    })
}

/// Byte length of the Argo document for the subgraph induced by `steps`.
/// Unknown step names are ignored.
pub fn estimate_size<S: AsRef<str> + Ord>(graph: &WorkflowGraph, steps: &BTreeSet<S>) -> u64 {
    argo::render(&graph.induced(steps)).len() as u64
}

/// Full-graph size without validation.
pub fn estimate_graph_size(graph: &WorkflowGraph) -> u64 {
    argo::render(graph).len() as u64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitEmission {
    pub documents: Vec<EmittedDocument>,
    pub manifest_json: String,
}

/// One document per part plus the manifest. Cut-edge artifacts appear as
/// outputs of the producing part and workflow-level input artifacts of the
/// consuming part.
pub fn emit_split(split: &SplitResult) -> Result<SplitEmission, IrError> {
    let documents = split
        .parts
        .iter()
        .map(|p| emit_argo(&p.graph))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SplitEmission {
        documents,
        manifest_json: split.manifest_json(),
    })
}
