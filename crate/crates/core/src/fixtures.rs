//! Small reference workflows used by tests, benchmarks and the CLI demo.

use serde::Deserialize;

use crate::builder::{Builder, ConditionExpr, Step};
use crate::ir::{ArtifactKind, ArtifactMeta, JobSpec, WorkflowGraph};
use crate::llm::{synthesize, CodeLake, MockClient, MockScript, Snippet, SynthConfig};

pub const GIB: u64 = 1 << 30;

fn produce(g: &mut WorkflowGraph, job: JobSpec, size_bytes: u64) {
    for o in &job.outputs {
        g.add_artifact(ArtifactMeta {
            id: o.clone(),
            kind: ArtifactKind::S3,
            size_bytes,
            producer: job.step_name.clone(),
            path: format!("/data/{o}"),
        });
    }
    g.add_job(job);
}

/// Six jobs, one 1 GiB artifact each: J1 -> J2 -> J3 -> J6, J4 -> J6, J5 alone.
/// `Jk` produces `ak`; J2 reads a1, J3 reads a2, J6 reads a3 and a4.
pub fn cache_running_example() -> WorkflowGraph {
    let mut g = WorkflowGraph::new("cache-example");
    let inputs: [&[&str]; 6] = [&[], &["a1"], &["a2"], &[], &[], &["a3", "a4"]];
    for (k, ins) in inputs.iter().enumerate() {
        let job = JobSpec::new(format!("J{}", k + 1), "busybox")
            .with_inputs(ins.iter().copied())
            .with_outputs([format!("a{}", k + 1)]);
        produce(&mut g, job, GIB);
    }
    for (a, b) in [("J1", "J2"), ("J2", "J3"), ("J3", "J6"), ("J4", "J6")] {
        g.add_edge(a, b);
    }
    g
}

/// `s0 -> s1 -> ... -> s{n-1}`, each step passing one artifact on.
pub fn chain(n: usize, runtime: f64, artifact_bytes: u64) -> WorkflowGraph {
    let mut g = WorkflowGraph::new("chain");
    for i in 0..n {
        let mut job = JobSpec::new(format!("s{i}"), "busybox")
            .with_runtime(runtime)
            .with_outputs([format!("a{i}")]);
        if i > 0 {
            job.inputs.push(format!("a{}", i - 1));
            g.add_edge(format!("s{}", i - 1), format!("s{i}"));
        }
        produce(&mut g, job, artifact_bytes);
    }
    g
}

const MIB: u64 = 1 << 20;

/// A -> {B, C} -> D built through the builder. A writes `raw`, B and C
/// each read it and write `left`/`right`, D reads both. Runtimes 1, 2, 3, 1.
pub fn diamond() -> WorkflowGraph {
    let mut b = Builder::new("diamond");
    let raw = b.create_named_artifact("raw", ArtifactKind::S3, "s3://bucket/raw", Some(GIB)).unwrap();
    let left = b.create_named_artifact("left", ArtifactKind::S3, "s3://bucket/left", Some(GIB / 2)).unwrap();
    let right = b.create_named_artifact("right", ArtifactKind::S3, "s3://bucket/right", Some(GIB / 2)).unwrap();
    let a = b
        .run(Step::container("alpine:3.6").name("A").command(["sh", "-c", "make-data"]).output(&raw).runtime(1.0))
        .unwrap();
    let bl = b.run(Step::container("alpine:3.6").name("B").input(&raw).output(&left).runtime(2.0)).unwrap();
    let cr = b
        .run(Step::container("alpine:3.6").name("C").after(&a).input(&raw).output(&right).runtime(3.0))
        .unwrap();
    b.run(Step::container("alpine:3.6").name("D").after(&bl).after(&cr).input(&left).input(&right).runtime(1.0))
        .unwrap();
    b.build().unwrap()
}

/// A script flips a coin; `heads` and `tails` run on the matching result.
pub fn coin_flip() -> WorkflowGraph {
    let mut b = Builder::new("coin-flip");
    let flip = b
        .run(Step::script(
            "python:alpine3.6",
            "import random\nprint('heads' if random.randint(0, 1) == 0 else 'tails')",
        )
        .name("flip-coin"))
        .unwrap();
    b.when(ConditionExpr::equal(&flip, "heads"), |b| {
        b.run(Step::container("alpine:3.6").name("heads").command(["sh", "-c", "echo \"it was heads\""]))
    })
    .unwrap();
    b.when(ConditionExpr::equal(&flip, "tails"), |b| {
        b.run(Step::container("alpine:3.6").name("tails").command(["sh", "-c", "echo \"it was tails\""]))
    })
    .unwrap();
    b.build().unwrap()
}

/// 30 jobs where most reads hit shared artifacts: three loaders write
/// 2 GiB datasets, nine feature jobs read one dataset each, nine trainers
/// read a dataset plus two feature sets, nine evaluators read a model and a
/// feature set. 45 of the 54 input references are to artifacts with two or
/// more consumers.
pub fn reuse_heavy() -> WorkflowGraph {
    let mut g = WorkflowGraph::new("reuse-heavy");
    let add = |g: &mut WorkflowGraph, name: String, rt: f64, ins: Vec<String>, out: String, size: u64| {
        for i in &ins {
            let producer = g.artifacts()[i].producer.clone();
            g.add_edge(producer, name.clone());
        }
        let job = JobSpec::new(name, "trainer:v1")
            .with_runtime(rt)
            .with_memory(2 * GIB)
            .with_inputs(ins)
            .with_outputs([out]);
        produce(g, job, size);
    };
    for i in 0..3 {
        add(&mut g, format!("load-{i}"), 10.0, vec![], format!("data-{i}"), 2 * GIB);
    }
    for i in 0..9 {
        add(&mut g, format!("feature-{i}"), 20.0, vec![format!("data-{}", i % 3)], format!("feat-{i}"), 512 * MIB);
    }
    for i in 0..9 {
        let ins = vec![format!("data-{}", (i + 1) % 3), format!("feat-{i}"), format!("feat-{}", (i + 1) % 9)];
        add(&mut g, format!("train-{i}"), 30.0 + i as f64, ins, format!("model-{i}"), 256 * MIB);
    }
    for i in 0..9 {
        let ins = vec![format!("model-{i}"), format!("feat-{i}")];
        add(&mut g, format!("eval-{i}"), 5.0, ins, format!("score-{i}"), MIB);
    }
    g
}

/// 450 jobs in 15 layers of 30. Each job reads the outputs of two jobs in
/// the previous layer and carries a ~6 KiB script, so the single document
/// is well over 2 MiB.
pub fn big450() -> WorkflowGraph {
    const LAYERS: usize = 15;
    const WIDTH: usize = 30;
    let mut g = WorkflowGraph::new("big450");
    let body: String = (0..120)
        .map(|k| format!("df = df.assign(col_{k:03}=df['x'] * {k} + {k})  # feature column {k:03}\n"))
        .collect();
    for l in 0..LAYERS {
        for w in 0..WIDTH {
            let name = format!("step-{l:02}-{w:02}");
            let mut job = JobSpec::new(&name, "python:3.11-slim")
                .with_runtime(1.0 + (w % 7) as f64)
                .with_outputs([format!("out-{l:02}-{w:02}")]);
            job.command = vec!["python".into()];
            job.script = Some(format!("import pandas as pd\ndf = pd.read_parquet('/in')\n{body}df.to_parquet('/out')\n"));
            if l > 0 {
                for p in [w, (w + 1) % WIDTH] {
                    job.inputs.push(format!("out-{:02}-{p:02}", l - 1));
                    g.add_edge(format!("step-{:02}-{p:02}", l - 1), name.clone());
                }
            }
            produce(&mut g, job, 64 * MIB);
        }
    }
    g
}

/// Every fixed fixture with a short name.
pub fn all() -> Vec<(&'static str, WorkflowGraph)> {
    vec![
        ("cache-example", cache_running_example()),
        ("chain", chain(8, 2.0, GIB)),
        ("diamond", diamond()),
        ("coin-flip", coin_flip()),
        ("reuse-heavy", reuse_heavy()),
        ("big450", big450()),
        ("model-selection", model_selection_reference()),
    ]
}

pub const MODEL_SELECTION_DESCRIPTION: &str = "I need to design a workflow to select the optimal image \
classification model from ResNet, ViT, and DenseNet. Load the image dataset once, train all three models \
on the same data, validate each one, compare their accuracy and pick the best.";

fn model_train_template(model: &str, image: &str) -> String {
    format!(
        r#"{{"op":"define","template":"{model}","step":{{"op":"run_job","name":"train-{model}","image":"{image}","command":["python","/train_model.py","--arch","{model}"],"replicas":{{"ps":1,"worker":2}},"inputs":["dataset"],"outputs":["model-{model}"],"runtime":3600}}}}"#
    )
}

/// Scripted replies for the model-selection example: eight subtasks, one
/// generation each except training, whose first draft only trains one
/// model and scores below the default baseline.
pub fn model_selection_script() -> MockScript {
    MockScript::deserialize(model_selection_script_json()).expect("fixture script is well formed")
}

/// [`model_selection_script`] as a JSON value.
pub fn model_selection_script_json() -> serde_json::Value {
    let load = [
        r#"{"op":"artifact","id":"dataset","kind":"s3","path":"s3://datasets/images","size":4294967296}"#,
        r#"{"op":"run_container","name":"load-data","image":"data-loader:v1","command":["python","load.py"],"outputs":["dataset"],"runtime":600}"#,
    ]
    .join("\n");
    let generate = vec![
        load,
        model_train_template("resnet", "resnet-trainer:v1"),
        model_train_template("vit", "vit-trainer:v1"),
        model_train_template("densenet", "densenet-trainer:v1"),
        r#"{"op":"concurrent","steps":[{"op":"use","template":"resnet"}]}"#.to_string(),
        r#"{"op":"concurrent","steps":[{"op":"use","template":"resnet"},{"op":"use","template":"vit"},{"op":"use","template":"densenet"}]}"#.to_string(),
        r#"{"op":"map","over":["resnet","vit","densenet"],"step":{"op":"run_container","name":"validate-{item}","image":"model-eval:v1","command":["python","model_eval.py"],"inputs":["model-{item}","dataset"],"outputs":["metrics-{item}"],"runtime":300}}"#.to_string(),
        r#"{"op":"run_container","name":"compare","image":"model-compare:v1","inputs":["metrics-resnet","metrics-vit","metrics-densenet"],"outputs":["ranking"],"runtime":30}"#.to_string(),
        r#"{"op":"run_container","name":"select","image":"model-select:v1","inputs":["ranking"],"outputs":["best-model"],"runtime":10}"#.to_string(),
    ];
    serde_json::json!({
        "decompose": [[
            "Data Loading",
            "Model Application (ResNet)",
            "Model Application (ViT)",
            "Model Application (DenseNet)",
            "Model Training",
            "Model Validation",
            "Model Comparison",
            "Model Selection",
        ]],
        "generate": generate,
        "score": [0.92, 0.9, 0.88, 0.9, 0.45, 0.93, 0.9, 0.85, 0.9],
    })
}

/// Reference snippets for the model-selection example.
pub fn model_selection_lake() -> CodeLake {
    let snip = |id: &str, tags: &[&str], text: &str| Snippet {
        id: id.into(),
        tags: tags.iter().map(|t| t.to_string()).collect(),
        text: text.into(),
    };
    CodeLake::new([
        snip(
            "load-data",
            &["data", "loading", "dataset"],
            r#"{"op":"run_container","name":"load-data","image":"data-loader:v1","outputs":["dataset"]}"#,
        ),
        snip(
            "tf-train",
            &["model", "training", "tensorflow"],
            r#"{"op":"run_job","name":"train","image":"wide-deep-model:v1.0","command":["python","/train_model.py"],"replicas":{"ps":1,"worker":1}}"#,
        ),
        snip(
            "map-eval",
            &["validation", "evaluation", "map"],
            r#"{"op":"map","over":["a","b"],"step":{"op":"run_container","name":"eval-{item}","image":"model_evalutation:v1"}}"#,
        ),
        snip(
            "compare",
            &["comparison", "selection"],
            r#"{"op":"run_container","name":"compare","image":"model-compare:v1"}"#,
        ),
    ])
}

/// The graph the model-selection script is expected to synthesize.
pub fn model_selection_reference() -> WorkflowGraph {
    let script = model_selection_script();
    let client = MockClient::new(script);
    let config = SynthConfig {
        workflow_name: "model-selection".into(),
        ..SynthConfig::default()
    };
    synthesize(MODEL_SELECTION_DESCRIPTION, &model_selection_lake(), &client, &config)
        .expect("fixture script synthesizes")
        .graph
}
