//! Seeded random workflows.

use rand::rngs::StdRng;
use rand::Rng;
use wfopt_core::ir::{ArtifactKind, ArtifactMeta, JobSpec, WorkflowGraph};

pub struct DagShape {
    pub nodes: usize,
    pub edge_prob: f64,
    /// Chance that a control edge also carries the producer's artifact.
    pub consume_prob: f64,
    /// Only the last `window` jobs are candidate predecessors.
    pub window: usize,
    pub max_preds: usize,
}

pub fn name(i: usize) -> String {
    format!("n{i:04}")
}

pub fn artifact(i: usize) -> String {
    format!("a{i:04}")
}

/// Jobs `n0000..` each producing `a0000..`; edges only go from lower to
/// higher index, so the graph is acyclic. Runtimes and cpu are integers.
pub fn random_dag(rng: &mut StdRng, shape: &DagShape, size: impl Fn(&mut StdRng) -> u64) -> WorkflowGraph {
    let mut g = WorkflowGraph::new("random");
    for j in 0..shape.nodes {
        let mut job = JobSpec::new(name(j), "img")
            .with_runtime(rng.gen_range(1..=10) as f64)
            .with_cpu(rng.gen_range(1..=4) as f64)
            .with_memory(rng.gen_range(1..=8) << 28)
            .with_outputs([artifact(j)]);
        let lo = j.saturating_sub(shape.window);
        let mut preds = 0;
        for i in lo..j {
            if preds >= shape.max_preds {
                break;
            }
            if rng.gen_bool(shape.edge_prob) {
                preds += 1;
                g.add_edge(name(i), name(j));
                if rng.gen_bool(shape.consume_prob) {
                    job.inputs.push(artifact(i));
                }
            }
        }
        g.add_artifact(ArtifactMeta {
            id: artifact(j),
            kind: ArtifactKind::S3,
            size_bytes: size(rng),
            producer: name(j),
            path: format!("s3://fuzz/{}", artifact(j)),
        });
        g.add_job(job);
    }
    g
}

pub fn small(rng: &mut StdRng, max_nodes: usize) -> WorkflowGraph {
    let shape = DagShape {
        nodes: rng.gen_range(1..=max_nodes),
        edge_prob: rng.gen_range(0.15..0.6),
        consume_prob: 0.7,
        window: max_nodes,
        max_preds: max_nodes,
    };
    random_dag(rng, &shape, |r| r.gen_range(1..=8u64) << 28)
}
