use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::json;
use wfopt_core::cache::{
    importance, reconstruction_cost, reuse_value, CacheConfig, CacheError, CachePolicy, CacheState,
    Decision, RejectReason,
};
use wfopt_core::emit::{emit_argo, emit_split, estimate_graph_size, estimate_size};
use wfopt_core::fixtures::{self, GIB};
use wfopt_core::ir::{self, Edge, JobSpec, WorkflowGraph, UNBOUNDED_LAYERS};
use wfopt_core::llm::{self, generate_calibrated, MockClient, Subtask, SynthConfig, TaskType};
use wfopt_core::sim::{self, CacheController, SimConfig};
use wfopt_core::split::{self, Budget};

use crate::gen::{self, DagShape};
use crate::oracle;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn graph_math() -> Result<String, String> {
    let start = Instant::now();
    let mut r = rng(1);
    let (mut graphs, mut artifacts) = (0, 0);
    for _ in 0..600 {
        let g = gen::small(&mut r, 12);
        graphs += 1;
        let cp = ir::critical_path_time(&g).map_err(|e| e.to_string())?;
        let want = oracle::critical_path(&g);
        ensure!(cp == want, "critical path {cp} != oracle {want}\n{}", ir::serialize(&g));
        for id in g.artifacts().keys() {
            artifacts += 1;
            let layers = *[1, 2, 3, 4, UNBOUNDED_LAYERS].choose(&mut r).unwrap();
            let cfg = CacheConfig::new(1.5, 1.0, 16 * GIB, layers).unwrap();
            let cached: BTreeSet<String> = g.artifacts().keys().filter(|_| r.gen_bool(0.4)).cloned().collect();
            let l = reconstruction_cost(&g, id, &cached, &cfg).map_err(|e| e.to_string())?;
            let want = oracle::reconstruction(&g, id, &cached, layers);
            ensure!(l == want, "reconstruction of {id} ({layers} layers): {l} != oracle {want}\n{}", ir::serialize(&g));
            let f = reuse_value(&g, id, &cfg).map_err(|e| e.to_string())?;
            let want = oracle::reuse(&g, id, layers);
            ensure!((f - want).abs() <= 1e-9, "reuse of {id} ({layers} layers): {f} != oracle {want}");
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1}s, limit 30s");
    Ok(format!("{graphs} graphs, {artifacts} artifacts"))
}

fn laplacian_holds(g: &WorkflowGraph) -> Result<(), String> {
    let m = ir::matrices(g).map_err(|e| e.to_string())?;
    let n = m.order.len();
    let mut total = 0;
    for i in 0..n {
        let row_out: i64 = m.adjacency[i].iter().sum();
        let col_in: i64 = (0..n).map(|k| m.adjacency[k][i]).sum();
        ensure!(m.degrees[i] == row_out + col_in, "degree of {} is not in + out", m.order[i]);
        for j in 0..n {
            let want = if i == j { m.degrees[i] - m.adjacency[i][i] } else { -m.adjacency[i][j] };
            ensure!(m.laplacian[i][j] == want, "laplacian[{i}][{j}] != D - A");
            total += m.laplacian[i][j];
        }
    }
    // sum(D) = 2|E| and sum(A) = |E|
    ensure!(total == g.edges().len() as i64, "laplacian entries sum to {total}, not |E|");
    Ok(())
}

pub fn laplacian_and_importance() -> Result<String, String> {
    let mut r = rng(2);
    let mut checked = 0;
    for _ in 0..500 {
        laplacian_holds(&gen::small(&mut r, 12))?;
        checked += 1;
    }
    for _ in 0..20 {
        let shape = DagShape {
            nodes: r.gen_range(50..400),
            edge_prob: 0.05,
            consume_prob: 0.5,
            window: 40,
            max_preds: 4,
        };
        laplacian_holds(&gen::random_dag(&mut r, &shape, |_| 1))?;
        checked += 1;
    }
    for (_, g) in fixtures::all() {
        laplacian_holds(&g)?;
        checked += 1;
    }
    let cfg = CacheConfig::new(1.5, 1.0, GIB, 3).unwrap();
    let zero = importance(0.0, 0.0, 0.0, &cfg);
    ensure!(zero == -1.0, "importance(0, 0, 0) = {zero}");
    let e = oracle::exp_series(1.0);
    let got = importance(e - 1.0, 2.0, 0.2, &cfg);
    // 1.5 * ln(e) + 1 * 2^2 - exp(-0.2)
    let want = 1.5 + 4.0 - oracle::exp_series(-0.2);
    ensure!((got - want).abs() <= 1e-9, "importance(e-1, 2, 0.2) = {got}, expected {want}");
    ensure!((want - 4.6813).abs() < 1e-4, "reference value drifted: {want}");
    Ok(format!("{checked} graphs; importance(e-1, 2, 0.2) = {got:.10}"))
}

/// Every cache decision is checked right after it is made.
fn check_capacity(state: &CacheState, cap: u64) -> Result<(), String> {
    ensure!(state.used_bytes() <= cap, "used {} > capacity {cap}", state.used_bytes());
    let last = state.events().last().map_or(0, |e| e.used_bytes);
    ensure!(last <= cap, "event recorded {last} > capacity {cap}");
    Ok(())
}

pub fn admission() -> Result<String, String> {
    let g = fixtures::cache_running_example();
    let mut state = CacheState::new(CacheConfig::with_capacity(5 * GIB).unwrap());
    for id in ["a1", "a2", "a3", "a4", "a5", "a6"] {
        state.on_artifact_produced(&g, id).map_err(|e| e.to_string())?;
    }
    let trace: Vec<String> = state
        .events()
        .iter()
        .map(|e| format!("{}({})", e.kind.as_str(), e.artifact))
        .collect();
    let want = ["admit(a1)", "admit(a2)", "admit(a3)", "admit(a4)", "admit(a5)", "evict(a5)", "admit(a6)"];
    ensure!(trace == want, "trace {trace:?}");

    let mut r = rng(3);
    let policies = [CachePolicy::No, CachePolicy::Importance, CachePolicy::Fifo, CachePolicy::Lru];
    let mut events = 0;
    for _ in 0..10_000 {
        let n = r.gen_range(2..=10);
        let shape = DagShape {
            nodes: n,
            edge_prob: 0.4,
            consume_prob: 0.7,
            window: n,
            max_preds: n,
        };
        let g = gen::random_dag(&mut r, &shape, |r| r.gen_range(1..=6u64) << 28);
        let cap = r.gen_range(1..=16u64) << 28;
        let policy = *policies.choose(&mut r).unwrap();
        let mut state = CacheState::new(CacheConfig::new(1.5, 1.0, cap, r.gen_range(1..=4)).unwrap());
        let ids: Vec<String> = g.artifacts().keys().cloned().collect();
        let mut arrivals = ids.clone();
        arrivals.shuffle(&mut r);
        for (t, id) in arrivals.iter().enumerate() {
            state.set_time(t as f64);
            state.offer(policy, &g, id).map_err(|e| e.to_string())?;
            check_capacity(&state, cap)?;
            for _ in 0..r.gen_range(0..3) {
                state.access(ids.choose(&mut r).unwrap());
                check_capacity(&state, cap)?;
            }
            if r.gen_bool(0.2) {
                state.offer(policy, &g, ids.choose(&mut r).unwrap()).map_err(|e| e.to_string())?;
                check_capacity(&state, cap)?;
            }
        }
        let resident: u64 = state.residents().iter().map(|id| g.artifacts()[id].size_bytes).sum();
        ensure!(resident == state.used_bytes(), "resident sizes {resident} != used {}", state.used_bytes());
        events += state.events().len();
    }
    Ok(format!("exact running-example trace; 10000 sequences, {events} events within capacity"))
}

/// Follows a fixed list of choices and records how many options each
/// decision had. Option 0 rejects; option k admits after evicting the
/// k-th feasible subset of residents.
struct Enumerator {
    choices: Vec<usize>,
    arity: Vec<usize>,
    pos: usize,
}

impl CacheController for Enumerator {
    fn offer(&mut self, state: &mut CacheState, graph: &WorkflowGraph, artifact: &str) -> Result<Decision, CacheError> {
        if state.contains(artifact) {
            return Ok(Decision::AlreadyCached);
        }
        let size = graph.artifacts()[artifact].size_bytes;
        let cap = state.config().capacity_bytes;
        let residents: Vec<String> = state.residents().into_iter().collect();
        let sizes: Vec<u64> = residents.iter().map(|r| graph.artifacts()[r].size_bytes).collect();
        let mut options: Vec<Option<u32>> = vec![None];
        if size <= cap {
            for mask in 0u32..(1 << residents.len()) {
                let freed: u64 = (0..residents.len()).filter(|&i| mask & (1 << i) != 0).map(|i| sizes[i]).sum();
                if state.used_bytes() - freed + size <= cap {
                    options.push(Some(mask));
                }
            }
        }
        if self.pos == self.choices.len() {
            self.choices.push(0);
        }
        let pick = self.choices[self.pos];
        self.arity.push(options.len());
        self.pos += 1;
        match options[pick] {
            None => Ok(Decision::Rejected {
                reason: RejectReason::LowestScore,
            }),
            Some(mask) => {
                let mut evicted = Vec::new();
                for (i, id) in residents.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        state.evict(id);
                        evicted.push(id.clone());
                    }
                }
                let d = state.admit_if_fits(artifact, size);
                assert!(d.is_admitted(), "enumerated option must fit");
                Ok(Decision::Admitted { evicted })
            }
        }
    }
}

/// Smallest makespan over every admission/eviction decision sequence.
fn optimum(g: &WorkflowGraph, cfg: &SimConfig) -> Result<(f64, usize), String> {
    let mut choices: Vec<usize> = Vec::new();
    let mut best = f64::INFINITY;
    let mut runs = 0;
    loop {
        let mut e = Enumerator {
            choices: choices.clone(),
            arity: Vec::new(),
            pos: 0,
        };
        let report = sim::simulate_with(g, cfg, &mut e).map_err(|e| e.to_string())?;
        runs += 1;
        best = best.min(report.makespan_seconds);
        let mut taken = e.choices;
        taken.truncate(e.pos);
        match (0..taken.len()).rev().find(|&i| taken[i] + 1 < e.arity[i]) {
            Some(i) => {
                taken.truncate(i + 1);
                taken[i] += 1;
                choices = taken;
            }
            None => return Ok((best, runs)),
        }
    }
}

pub fn policy_ordering() -> Result<String, String> {
    let g = fixtures::reuse_heavy();
    let mut notes = Vec::new();
    for cap_gib in [2u64, 4, 8, 10, 16] {
        let base = SimConfig::new(CachePolicy::Importance, CacheConfig::with_capacity(cap_gib * GIB).unwrap());
        let rows = sim::compare_policies(&g, &base, &sim_policies()).map_err(|e| e.to_string())?;
        let by: BTreeMap<CachePolicy, &sim::SimReport> = rows.iter().map(|r| (r.policy, r)).collect();
        let (imp, no, all) = (by[&CachePolicy::Importance], by[&CachePolicy::No], by[&CachePolicy::All]);
        ensure!(
            imp.makespan_seconds <= no.makespan_seconds,
            "{cap_gib} GiB: T(IMPORTANCE) {} > T(NO) {}",
            imp.makespan_seconds,
            no.makespan_seconds
        );
        ensure!(
            imp.peak_cache_bytes <= all.peak_cache_bytes,
            "{cap_gib} GiB: peak cache IMPORTANCE {} > ALL {}",
            imp.peak_cache_bytes,
            all.peak_cache_bytes
        );
        for r in &rows {
            ensure!(all.hits >= r.hits, "{cap_gib} GiB: ALL hits {} < {} hits {}", all.hits, r.policy, r.hits);
        }
        notes.push(format!("{cap_gib}GiB T {:.1}/{:.1}", imp.makespan_seconds, no.makespan_seconds));
    }

    let (mut runs, mut instances) = (0, 0);
    let mut ratios: Vec<(f64, u64, usize)> = Vec::new();
    for seed in 40..45u64 {
        let mut r = rng(seed);
        for k in 0..300 {
            let n = r.gen_range(2..=6);
            let shape = DagShape {
                nodes: n,
                edge_prob: 0.5,
                consume_prob: 0.8,
                window: n,
                max_preds: n,
            };
            let g = gen::random_dag(&mut r, &shape, |_| GIB);
            let cfg = SimConfig::new(CachePolicy::Importance, CacheConfig::with_capacity(2 * GIB).unwrap());
            let t = sim::simulate(&g, &cfg).map_err(|e| e.to_string())?.makespan_seconds;
            let (opt, n_runs) = optimum(&g, &cfg)?;
            runs += n_runs;
            instances += 1;
            ensure!(opt <= t + 1e-9, "seed {seed} instance {k}: enumeration missed the policy's own schedule");
            ratios.push((t / opt, seed, k));
        }
    }
    let over: Vec<&(f64, u64, usize)> = ratios.iter().filter(|r| r.0 > 1.2).collect();
    let (worst, ws, wk) = ratios.iter().copied().fold((1.0, 0, 0), |a, b| if b.0 > a.0 { b } else { a });
    let mean = ratios.iter().map(|r| r.0).sum::<f64>() / ratios.len() as f64;
    ensure!(
        over.is_empty(),
        "{} of {instances} tiny instances exceed 1.2x the optimum; worst {worst:.3}x (seed {ws} instance {wk}), mean {mean:.4}",
        over.len()
    );
    Ok(format!(
        "reuse-heavy {}; {instances} tiny instances, worst ratio {worst:.4}, mean {mean:.4}, {runs} enumerated runs",
        notes.join(", ")
    ))
}

fn sim_policies() -> [CachePolicy; 5] {
    [CachePolicy::No, CachePolicy::All, CachePolicy::Importance, CachePolicy::Fifo, CachePolicy::Lru]
}

fn check_split(g: &WorkflowGraph, budget: &Budget) -> Result<usize, String> {
    let result = split::split(g, budget).map_err(|e| e.to_string())?;
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for p in &result.parts {
        for j in p.graph.jobs() {
            ensure!(seen.insert(j.step_name.clone(), p.index).is_none(), "{} in two parts", j.step_name);
        }
        let within = budget.admits(&p.usage);
        ensure!(
            within || (p.oversized && p.graph.len() == 1),
            "part {} ({} jobs, {:?}) over budget {budget:?}",
            p.index,
            p.graph.len(),
            p.usage
        );
        ensure!(ir::validate(&p.graph).is_valid(), "part {} is not a valid workflow", p.index);
    }
    ensure!(seen.len() == g.len(), "parts cover {} of {} jobs", seen.len(), g.len());
    let mut part_edges = Vec::new();
    for e in g.edges() {
        let (a, b) = (seen[&e.from], seen[&e.to]);
        if a != b {
            part_edges.push((a, b));
            ensure!(
                result.dependencies.iter().any(|d| d.edge == *e && d.producer_part == a && d.consumer_part == b),
                "cut edge {e} missing from the manifest"
            );
        }
    }
    let manifest: Vec<(usize, usize)> = result.dependencies.iter().map(|d| (d.producer_part, d.consumer_part)).collect();
    ensure!(manifest.iter().all(|(a, b)| a != b), "manifest has a self dependency");
    ensure!(oracle::acyclic(result.parts.len(), &manifest), "manifest part graph has a cycle");
    Ok(result.parts.len())
}

pub fn splitter() -> Result<String, String> {
    let mut r = rng(5);
    let (mut parts, mut nodes) = (0, 0);
    for k in 0..1000 {
        let n = r.gen_range(1..=2000);
        let shape = DagShape {
            nodes: n,
            edge_prob: r.gen_range(0.02..0.3),
            consume_prob: 0.5,
            window: r.gen_range(1..64),
            max_preds: r.gen_range(1..5),
        };
        let mut g = gen::random_dag(&mut r, &shape, |r| r.gen_range(1..=64u64) << 20);
        if k % 10 == 0 {
            // a few jobs too large for any part on their own
            let victims: Vec<String> = g.jobs().iter().step_by(97).map(|j| j.step_name.clone()).collect();
            for v in victims {
                let job: &mut JobSpec = g.job_mut(&v).unwrap();
                job.script = Some("x".repeat(40_000));
                job.replicas = BTreeMap::from([("worker".to_string(), 50)]);
            }
        }
        let budget = Budget::new(
            r.gen_range(4u64..256) << 10,
            r.gen_range(1..=300),
            r.gen_bool(0.5).then(|| r.gen_range(1..=400)),
        )
        .unwrap();
        parts += check_split(&g, &budget).map_err(|e| format!("graph {k}: {e}"))?;
        nodes += n;
    }

    let chain = fixtures::chain(10_000, 1.0, 1 << 20);
    let start = Instant::now();
    let result = split::split(&chain, &Budget::default()).map_err(|e| e.to_string())?;
    let chain_secs = start.elapsed().as_secs_f64();
    ensure!(chain_secs < 1.0, "10k chain took {chain_secs:.3}s");
    ensure!(result.parts.iter().map(|p| p.graph.len()).sum::<usize>() == 10_000, "chain not covered");

    let big = fixtures::big450();
    let whole = emit_argo(&big).map_err(|e| e.to_string())?.size_bytes;
    let limit = 2 * 1024 * 1024;
    ensure!(whole > limit, "big450 fits in one document ({whole} bytes)");
    let result = split::split(&big, &Budget::new(limit, 10_000, None).unwrap()).map_err(|e| e.to_string())?;
    let docs = emit_split(&result).map_err(|e| e.to_string())?;
    for d in &docs.documents {
        ensure!(d.size_bytes <= limit && d.text.len() as u64 == d.size_bytes, "{} is {} bytes", d.name, d.size_bytes);
    }
    let largest = docs.documents.iter().map(|d| d.size_bytes).max().unwrap_or(0);
    Ok(format!(
        "1000 graphs / {nodes} jobs into {parts} parts; 10k chain {:.0} ms; big450 {whole} B -> {} documents, largest {largest} B",
        chain_secs * 1e3,
        docs.documents.len()
    ))
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Edges recovered from the `dependencies` lists of the emitted DAG.
fn parse_back(yaml: &str) -> Result<BTreeSet<Edge>, String> {
    let doc: serde_yaml::Value = serde_yaml::from_str(yaml).map_err(|e| e.to_string())?;
    let templates = doc["spec"]["templates"].as_sequence().ok_or("no templates")?;
    let main = templates.iter().find(|t| t["name"].as_str() == Some("main")).ok_or("no main template")?;
    let mut edges = BTreeSet::new();
    for task in main["dag"]["tasks"].as_sequence().ok_or("no dag tasks")? {
        let name = task["name"].as_str().ok_or("task without name")?;
        for dep in task["dependencies"].as_sequence().into_iter().flatten() {
            edges.insert(Edge::new(dep.as_str().ok_or("non-string dependency")?, name));
        }
    }
    Ok(edges)
}

pub fn emitter() -> Result<String, String> {
    let bless = std::env::var_os("WFOPT_BLESS").is_some();
    for (name, g) in [("diamond", fixtures::diamond()), ("coin-flip", fixtures::coin_flip())] {
        let first = emit_argo(&g).map_err(|e| e.to_string())?;
        let second = emit_argo(&g).map_err(|e| e.to_string())?;
        ensure!(first == second, "{name}: two emissions differ");
        let path = golden_dir().join(format!("{name}.yaml"));
        if bless {
            std::fs::write(&path, &first.text).map_err(|e| e.to_string())?;
        }
        let golden = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure!(golden == first.text, "{name}: output differs from {}", path.display());
        let edges = parse_back(&first.text)?;
        ensure!(&edges == g.edges(), "{name}: parsed edges {edges:?} != IR edges {:?}", g.edges());
    }
    let mut sized = 0;
    for (name, g) in fixtures::all() {
        let doc = emit_argo(&g).map_err(|e| e.to_string())?;
        let all: BTreeSet<&str> = g.jobs().iter().map(|j| j.step_name.as_str()).collect();
        ensure!(estimate_size(&g, &all) == doc.size_bytes, "{name}: estimate_size differs from emitted length");
        ensure!(estimate_graph_size(&g) == doc.text.len() as u64, "{name}: graph size estimate differs");
        ensure!(parse_back(&doc.text)? == *g.edges(), "{name}: parse-back edge set differs");
        sized += 1;
    }
    Ok(format!("2 golden files stable, {sized} fixtures size-exact and parse back"))
}

pub fn synthesis() -> Result<String, String> {
    let client = MockClient::from_json(r#"{"generate": ["a", "b", "c"], "score": [0.3, 0.5, 0.9]}"#)
        .map_err(|e| e.to_string())?;
    let subtask = Subtask {
        index: 0,
        text: "Model Training".into(),
        task_type: TaskType::Training,
    };
    let c = generate_calibrated(&subtask, &[], &client, 0.8, 10, None, None).map_err(|e| e.to_string())?;
    ensure!(client.generate_calls() == 3, "{} generate calls", client.generate_calls());
    ensure!(c.rounds_used == 3 && c.score == 0.9, "rounds {} score {}", c.rounds_used, c.score);

    let client = MockClient::new(fixtures::model_selection_script());
    let config = SynthConfig {
        workflow_name: "model-selection".into(),
        ..SynthConfig::default()
    };
    let s = llm::synthesize(fixtures::MODEL_SELECTION_DESCRIPTION, &fixtures::model_selection_lake(), &client, &config)
        .map_err(|e| e.to_string())?;
    let g = &s.graph;
    ensure!(ir::validate(g).is_valid(), "synthesized IR invalid: {}", ir::validate(g));
    let types: Vec<TaskType> = s.subtasks.iter().map(|r| r.subtask.task_type).collect();
    use TaskType::*;
    let want = [DataLoading, ModelGeneration, ModelGeneration, ModelGeneration, Training, Evaluation, Comparison, Selection];
    ensure!(types == want, "subtask types {types:?}");
    let trainers: Vec<&JobSpec> = g.jobs().iter().filter(|j| j.step_name.starts_with("train-")).collect();
    ensure!(trainers.len() == 3, "{} training steps", trainers.len());
    let preds = |step: &str| -> BTreeSet<&str> {
        g.edges().iter().filter(|e| e.to == step).map(|e| e.from.as_str()).collect()
    };
    let first = preds(&trainers[0].step_name);
    for t in &trainers {
        ensure!(preds(&t.step_name) == first, "trainers do not share predecessors");
        ensure!(
            !ancestors(g, &t.step_name).iter().any(|a| a.starts_with("train-")),
            "{} depends on another trainer",
            t.step_name
        );
    }
    let compare = ancestors(g, "compare");
    ensure!(trainers.iter().all(|t| compare.contains(&t.step_name)), "comparison does not follow every trainer");
    let rounds = s.subtasks[4].calibration.rounds_used;
    ensure!(rounds == 2, "training subtask took {rounds} rounds");
    Ok(format!("3 calls for [0.3, 0.5, 0.9]; synthesized {} jobs, {} edges", g.len(), g.edges().len()))
}

fn ancestors(g: &WorkflowGraph, step: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![step.to_string()];
    while let Some(v) = stack.pop() {
        for e in g.edges().iter().filter(|e| e.to == v) {
            if out.insert(e.from.clone()) {
                stack.push(e.from.clone());
            }
        }
    }
    out
}

fn cards(maximize: bool) -> (llm::DataCard, llm::ModelCard) {
    let data = serde_json::from_value(json!({
        "dataset_name": "cifar-10",
        "input_type": "image",
        "label_space": ["airplane", "cat"],
        "metrics": [{"name": if maximize { "accuracy" } else { "loss" }, "direction": if maximize { "maximize" } else { "minimize" }}]
    }))
    .unwrap();
    let model = serde_json::from_value(json!({
        "name": "resnet-18", "structure": "cnn", "description": "residual network"
    }))
    .unwrap();
    (data, model)
}

fn run_tune(maximize: bool, finals: &[f64], settings: &[llm::Hyperparameters]) -> Result<usize, String> {
    let logs: Vec<Vec<f64>> = finals.iter().map(|f| vec![0.5 * f, *f]).collect();
    let client = MockClient::from_json(&json!({ "predict_log": logs }).to_string()).map_err(|e| e.to_string())?;
    let (d, m) = cards(maximize);
    Ok(llm::tune(&d, &m, settings, &client).map_err(|e| e.to_string())?.selected_index)
}

pub fn tuning() -> Result<String, String> {
    let mut r = rng(8);
    let mut trials = 0;
    for _ in 0..300 {
        let n = r.gen_range(1..=8);
        let maximize = r.gen_bool(0.5);
        let mut finals: Vec<f64> = Vec::new();
        while finals.len() < n {
            let v = r.gen_range(1..1000) as f64 / 1000.0;
            if !finals.contains(&v) {
                finals.push(v);
            }
        }
        let settings: Vec<llm::Hyperparameters> =
            (0..n).map(|i| BTreeMap::from([("lr".to_string(), json!(i))])).collect();
        let best = (0..n)
            .reduce(|a, b| {
                let better = if maximize { finals[b] > finals[a] } else { finals[b] < finals[a] };
                if better {
                    b
                } else {
                    a
                }
            })
            .unwrap();
        let got = run_tune(maximize, &finals, &settings)?;
        ensure!(got == best, "selected {got}, expected {best} for {finals:?} (maximize {maximize})");
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let pf: Vec<f64> = perm.iter().map(|&i| finals[i]).collect();
        let ps: Vec<llm::Hyperparameters> = perm.iter().map(|&i| settings[i].clone()).collect();
        let got = run_tune(maximize, &pf, &ps)?;
        ensure!(ps[got] == settings[best], "selection changed under reordering");
        trials += 1;
    }
    let h: Vec<llm::Hyperparameters> = (0..4).map(|i| BTreeMap::from([("lr".to_string(), json!(i))])).collect();
    ensure!(run_tune(true, &[0.81, 0.90, 0.85], &h[..3])? == 1, "accuracy example");
    ensure!(run_tune(false, &[0.4, 0.2], &h[..2])? == 1, "loss example");
    ensure!(run_tune(true, &[0.7, 0.9, 0.5, 0.9], &h)? == 1, "max tie must go to the first");
    ensure!(run_tune(false, &[0.3, 0.1, 0.1, 0.2], &h)? == 1, "min tie must go to the first");
    Ok(format!("{trials} random selections order-invariant; ties resolve to first"))
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Result<Self, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let root = dir.path();
        let write = |rel: &str, text: &str| -> Result<(), String> {
            let p = root.join(rel);
            std::fs::create_dir_all(p.parent().unwrap()).map_err(|e| e.to_string())?;
            std::fs::write(p, text).map_err(|e| e.to_string())
        };
        write("description.txt", fixtures::MODEL_SELECTION_DESCRIPTION)?;
        write("script.json", &fixtures::model_selection_script_json().to_string())?;
        for s in fixtures::model_selection_lake().snippets() {
            write(&format!("lake/{}.jsonl", s.id), &format!("---\ntags: {}\n---\n{}\n", s.tags.join(", "), s.text))?;
        }
        let (d, m) = cards(true);
        write("data.json", &serde_json::to_string(&d).unwrap())?;
        write("model.json", &serde_json::to_string(&m).unwrap())?;
        write("hp.json", &json!([{"lr": 0.1}, {"lr": 0.01}, {"lr": 0.001}]).to_string())?;
        write("tune-script.json", &json!({"predict_log": [[0.6, 0.81], [0.7, 0.9], [0.8, 0.85]]}).to_string())?;
        write("results.json", &json!({"flip-coin": ["tails"]}).to_string())?;
        Ok(Workspace { dir })
    }

    fn run(&self, args: &[&str]) -> Result<(i32, String), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_wfopt"))
            .args(args)
            .current_dir(self.dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        let code = out.status.code().unwrap_or(-1);
        Ok((code, format!("{}\n--stderr--\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))))
    }

    /// Every file under the workspace, path to bytes.
    fn files(&self) -> BTreeMap<PathBuf, Vec<u8>> {
        fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
            for e in std::fs::read_dir(dir).unwrap().flatten() {
                let p = e.path();
                if p.is_dir() {
                    walk(root, &p, out);
                } else {
                    out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
                }
            }
        }
        let mut out = BTreeMap::new();
        walk(self.dir.path(), self.dir.path(), &mut out);
        out
    }
}

const SESSION: &[&[&str]] = &[
    &["fixture", "diamond", "-o", "diamond.json"],
    &["fixture", "coin-flip", "-o", "coin.json"],
    &["fixture", "reuse-heavy", "-o", "reuse.json"],
    &["fixture", "big450", "-o", "big450.json"],
    &["validate", "diamond.json"],
    &["--json", "validate", "reuse.json"],
    &["split", "big450.json", "--size-limit", "2MiB", "-o", "parts"],
    &["--json", "split", "reuse.json", "--step-limit", "7", "-o", "reuse-parts"],
    &["simulate", "reuse.json", "--compare", "NO,ALL,COULER,FIFO,LRU", "--capacity", "10GiB", "--trace", "trace.csv"],
    &["--json", "simulate", "coin.json", "--policy", "LRU", "--results", "results.json", "--trace", "coin.csv"],
    &["emit", "diamond.json", "-o", "diamond.yaml"],
    &["--json", "emit", "--manifest", "parts/manifest.json", "-o", "yaml"],
    &["synth", "description.txt", "--lake", "lake", "--client", "mock:script.json", "--baseline-score", "0.8", "-o", "synth"],
    &["--json", "tune", "--data-card", "data.json", "--model-card", "model.json", "--hp", "hp.json", "--client", "mock:tune-script.json"],
    &["tune", "--data-card", "data.json", "--model-card", "model.json", "--hp", "hp.json", "--client", "mock:tune-script.json"],
];

pub fn determinism() -> Result<String, String> {
    for (name, g) in fixtures::all() {
        let text = ir::serialize(&g);
        let back = ir::deserialize(&text).map_err(|e| format!("{name}: {e}"))?;
        ensure!(back == g, "{name}: deserialized graph differs");
        ensure!(ir::serialize(&back) == text, "{name}: re-serialization differs");
    }
    let (a, b) = (Workspace::new()?, Workspace::new()?);
    for args in SESSION {
        let ra = a.run(args)?;
        let rb = b.run(args)?;
        ensure!(ra.0 == 0, "`wfopt {}` exited {}: {}", args.join(" "), ra.0, ra.1);
        ensure!(ra == rb, "`wfopt {}` output differs between runs", args.join(" "));
    }
    let (fa, fb) = (a.files(), b.files());
    ensure!(fa.keys().eq(fb.keys()), "different files written");
    for (p, bytes) in &fa {
        ensure!(fb[p] == *bytes, "{} differs between runs", p.display());
    }
    Ok(format!(
        "{} fixtures round-trip; {} commands byte-identical, {} files compared",
        fixtures::all().len(),
        SESSION.len(),
        fa.len()
    ))
}
