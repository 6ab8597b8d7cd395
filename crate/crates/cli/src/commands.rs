use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context};
use serde_json::{json, Value};
use wfopt_core::cache::{CacheConfig, CachePolicy, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_LAYERS};
use wfopt_core::emit::{emit_argo, BackendKind};
use wfopt_core::ir::{self, WorkflowGraph};
use wfopt_core::llm::{
    self, CalibrationStatus, CodeLake, DataCard, HttpClientConfig, HttpModelClient, Hyperparameters, MockClient,
    ModelCard, ModelClient, SynthConfig,
};
use wfopt_core::sim::{self, PolicyRow, SimConfig, SimReport, DEFAULT_CACHE_READ_COST_PER_BYTE, DEFAULT_IO_COST_PER_BYTE};
use wfopt_core::split::{self, Budget, Manifest, DEFAULT_SIZE_LIMIT, DEFAULT_STEP_LIMIT};
use wfopt_core::{fixtures, llm::DEFAULT_TOP_K};

use crate::config::{parse_bytes, pick, FileConfig};
use crate::{Cli, Command, EmitArgs, SimulateArgs, SplitArgs, SynthArgs, TuneArgs};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_PIPELINE: u8 = 4;

const DEFAULT_CAPACITY: u64 = 10 << 30;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
    /// Report to print before the error, e.g. the violation list.
    pub stdout: Option<String>,
}

type Outcome<T> = Result<T, Failure>;

fn fail(code: u8) -> impl Fn(anyhow::Error) -> Failure {
    move |error| Failure {
        code,
        error,
        stdout: None,
    }
}

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    fail(EXIT_USAGE)(e.into())
}

fn invalid<E: Into<anyhow::Error>>(e: E) -> Failure {
    fail(EXIT_VALIDATION)(e.into())
}

fn pipeline<E: Into<anyhow::Error>>(e: E) -> Failure {
    fail(EXIT_PIPELINE)(e.into())
}

pub fn run(cli: &Cli) -> Outcome<String> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(usage)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx { json: cli.json, file };
    match &cli.command {
        Command::Validate { ir } => ctx.validate(ir),
        Command::Split(a) => ctx.split(a),
        Command::Simulate(a) => ctx.simulate(a),
        Command::Emit(a) => ctx.emit(a),
        Command::Synth(a) => ctx.synth(a),
        Command::Tune(a) => ctx.tune(a),
        Command::Fixture { name, output } => ctx.fixture(name, output),
    }
}

struct Ctx {
    json: bool,
    file: FileConfig,
}

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)
}

fn write(path: &Path, text: &str) -> Outcome<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(usage)?;
    }
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(usage)
}

fn load_ir(path: &Path) -> Outcome<WorkflowGraph> {
    ir::deserialize(&read(path)?)
        .with_context(|| format!("loading {}", path.display()))
        .map_err(invalid)
}

/// Load and require a structurally valid graph.
fn load_valid(path: &Path) -> Outcome<WorkflowGraph> {
    let g = load_ir(path)?;
    let report = ir::validate(&g);
    if !report.is_valid() {
        return Err(invalid(anyhow!("{}: {report}", path.display())));
    }
    Ok(g)
}

fn to_json(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn client_from(spec: &str) -> Outcome<Box<dyn ModelClient>> {
    if let Some(path) = spec.strip_prefix("mock:") {
        let text = read(Path::new(path))?;
        let mock = MockClient::from_json(&text)
            .with_context(|| format!("mock script {path}"))
            .map_err(usage)?;
        return Ok(Box::new(mock));
    }
    let endpoint = spec.strip_prefix("http:").filter(|e| !e.starts_with("//")).unwrap_or(spec);
    if endpoint.starts_with("http://") || endpoint.starts_with("https://") {
        return Ok(Box::new(HttpModelClient::new(HttpClientConfig {
            endpoint: endpoint.to_string(),
            api_key_env: "WFOPT_API_KEY".into(),
            timeout_seconds: 60,
            model: None,
        })));
    }
    Err(usage(anyhow!("client must be `mock:<script.json>` or an http(s) endpoint, got `{spec}`")))
}

fn policy(text: &str) -> Outcome<CachePolicy> {
    CachePolicy::from_str(text).map_err(|e| usage(anyhow!(e)))
}

fn human(n: u64) -> String {
    const UNITS: [&str; 5] = ["B", "KiB", "MiB", "GiB", "TiB"];
    let mut v = n as f64;
    let mut u = 0;
    while v >= 1024.0 && u + 1 < UNITS.len() {
        v /= 1024.0;
        u += 1;
    }
    if u == 0 {
        format!("{n} B")
    } else {
        format!("{v:.2} {}", UNITS[u])
    }
}

impl Ctx {
    fn validate(&self, path: &Path) -> Outcome<String> {
        let g = load_ir(path)?;
        let report = ir::validate(&g);
        let errors: Vec<String> = report.errors().map(|v| v.to_string()).collect();
        let infos: Vec<String> = report.infos().map(|v| v.to_string()).collect();
        let out = if self.json {
            to_json(&json!({
                "valid": report.is_valid(),
                "errors": errors,
                "infos": infos,
                "violations": report.errors().collect::<Vec<_>>(),
            }))
        } else {
            let mut s = String::new();
            for e in &errors {
                writeln!(s, "error: {e}").unwrap();
            }
            for i in &infos {
                writeln!(s, "info: {i}").unwrap();
            }
            if errors.is_empty() {
                writeln!(s, "ok: {} jobs, {} edges", g.len(), g.edges().len()).unwrap();
            }
            s
        };
        if report.is_valid() {
            Ok(out)
        } else {
            Err(Failure {
                code: EXIT_VALIDATION,
                error: anyhow!("{} violation(s) in {}", errors.len(), path.display()),
                stdout: Some(out),
            })
        }
    }

    fn budget(&self, a: &SplitArgs) -> Outcome<Budget> {
        let f = &self.file.budget;
        let size = match (&a.size_limit, &f.size_limit) {
            (Some(t), _) => parse_bytes(t).map_err(usage)?,
            (None, Some(v)) => v.bytes().map_err(usage)?,
            (None, None) => DEFAULT_SIZE_LIMIT,
        };
        let steps = pick(a.step_limit, f.step_limit, DEFAULT_STEP_LIMIT);
        let pods = a.pod_limit.or(f.pod_limit);
        Budget::new(size, steps, pods).map_err(usage)
    }

    fn split(&self, a: &SplitArgs) -> Outcome<String> {
        let budget = self.budget(a)?;
        let g = load_valid(&a.ir)?;
        let result = split::split(&g, &budget).map_err(invalid)?;
        let mut files = Vec::new();
        for p in &result.parts {
            let path = a.output.join(format!("{}.json", p.graph.name()));
            write(&path, &ir::serialize(&p.graph))?;
            files.push(path);
        }
        let manifest_path = a.output.join("manifest.json");
        write(&manifest_path, &result.manifest_json())?;
        let manifest = result.manifest();
        if self.json {
            return Ok(to_json(&json!({
                "budget": budget,
                "manifest": manifest,
                "files": files,
                "manifest_path": manifest_path,
            })));
        }
        let mut s = String::new();
        writeln!(s, "{:<5} {:<32} {:>6} {:>6} {:>12}  flag", "part", "name", "steps", "pods", "size").unwrap();
        for p in &manifest.parts {
            writeln!(
                s,
                "{:<5} {:<32} {:>6} {:>6} {:>12}  {}",
                p.index,
                p.name,
                p.step_count,
                p.pod_count,
                human(p.size_bytes),
                if p.oversized { "oversized" } else { "" }
            )
            .unwrap();
        }
        writeln!(
            s,
            "{} part(s), {} cut dependencies, written to {}",
            manifest.parts.len(),
            manifest.dependencies.len(),
            a.output.display()
        )
        .unwrap();
        Ok(s)
    }

    fn sim_config(&self, a: &SimulateArgs) -> Outcome<SimConfig> {
        let c = &self.file.cache;
        let capacity = match (&a.capacity, &c.capacity) {
            (Some(t), _) => parse_bytes(t).map_err(usage)?,
            (None, Some(v)) => v.bytes().map_err(usage)?,
            (None, None) => DEFAULT_CAPACITY,
        };
        let cache = CacheConfig::new(
            pick(a.alpha, c.alpha, DEFAULT_ALPHA),
            pick(a.beta, c.beta, DEFAULT_BETA),
            capacity,
            pick(a.n_layers, c.n_layers, DEFAULT_LAYERS),
        )
        .map_err(usage)?;
        let s = &self.file.simulate;
        let policy = policy(a.policy.as_deref().or(s.policy.as_deref()).unwrap_or("IMPORTANCE"))?;
        let mut cfg = SimConfig::new(policy, cache).with_costs(
            pick(a.io_cost, s.io_cost_per_byte, DEFAULT_IO_COST_PER_BYTE),
            pick(a.read_cost, s.cache_read_cost_per_byte, DEFAULT_CACHE_READ_COST_PER_BYTE),
        );
        cfg.parallelism_limit = a.parallelism.or(s.parallelism);
        if let Some(p) = &a.results {
            cfg.step_results = serde_json::from_str::<BTreeMap<String, Vec<String>>>(&read(p)?)
                .with_context(|| format!("step results {}", p.display()))
                .map_err(usage)?;
        }
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }

    fn simulate(&self, a: &SimulateArgs) -> Outcome<String> {
        let cfg = self.sim_config(a)?;
        let g = load_valid(&a.ir)?;
        let policies = a.compare.iter().map(|p| policy(p)).collect::<Outcome<Vec<_>>>()?;
        let reports: Vec<SimReport> = if policies.is_empty() {
            vec![sim::simulate(&g, &cfg).map_err(pipeline)?]
        } else {
            sim::compare_policies(&g, &cfg, &policies).map_err(pipeline)?
        };
        if let Some(trace) = &a.trace {
            for r in &reports {
                let path = if policies.is_empty() { trace.clone() } else { per_policy(trace, r.policy) };
                write(&path, &r.trace_csv())?;
            }
        }
        if self.json {
            return Ok(if policies.is_empty() {
                reports[0].to_json()
            } else {
                to_json(&json!({ "rows": reports.iter().map(PolicyRow::from).collect::<Vec<_>>() }))
            });
        }
        let mut s = String::new();
        writeln!(
            s,
            "{:<11} {:>12} {:>12} {:>12} {:>6} {:>6} {:>9}",
            "policy", "makespan_s", "peak_mem", "peak_cache", "hits", "misses", "hit_ratio"
        )
        .unwrap();
        for r in &reports {
            writeln!(
                s,
                "{:<11} {:>12.3} {:>12} {:>12} {:>6} {:>6} {:>9.4}",
                r.policy.as_str(),
                r.makespan_seconds,
                human(r.peak_memory_bytes),
                human(r.peak_cache_bytes),
                r.hits,
                r.misses,
                r.hit_ratio
            )
            .unwrap();
        }
        Ok(s)
    }

    fn emit(&self, a: &EmitArgs) -> Outcome<String> {
        if a.backend != BackendKind::Argo.to_string() {
            return Err(usage(anyhow!("unknown backend `{}` (available: argo)", a.backend)));
        }
        let mut written: Vec<(PathBuf, u64)> = Vec::new();
        if let Some(manifest_path) = &a.manifest {
            let manifest: Manifest = serde_json::from_str(&read(manifest_path)?)
                .with_context(|| format!("manifest {}", manifest_path.display()))
                .map_err(invalid)?;
            let dir = manifest_path.parent().unwrap_or(Path::new("."));
            for p in &manifest.parts {
                let g = load_valid(&dir.join(format!("{}.json", p.name)))?;
                let doc = emit_argo(&g).map_err(invalid)?;
                let path = a.output.join(format!("{}.yaml", p.name));
                write(&path, &doc.text)?;
                written.push((path, doc.size_bytes));
            }
        } else {
            let ir_path = a.ir.as_ref().expect("clap requires ir or manifest");
            let g = load_valid(ir_path)?;
            let doc = emit_argo(&g).map_err(invalid)?;
            write(&a.output, &doc.text)?;
            written.push((a.output.clone(), doc.size_bytes));
        }
        if self.json {
            let files: Vec<Value> = written.iter().map(|(p, n)| json!({ "path": p, "size_bytes": n })).collect();
            return Ok(to_json(&json!({ "backend": a.backend, "documents": files })));
        }
        let mut s = String::new();
        for (p, n) in &written {
            writeln!(s, "{} ({})", p.display(), human(*n)).unwrap();
        }
        Ok(s)
    }

    fn client(&self, flag: &Option<String>) -> Outcome<Box<dyn ModelClient>> {
        let spec = flag
            .as_deref()
            .or(self.file.synth.client.as_deref())
            .ok_or_else(|| usage(anyhow!("no model client given; use --client mock:<script.json>")))?;
        client_from(spec)
    }

    fn synth(&self, a: &SynthArgs) -> Outcome<String> {
        let f = &self.file.synth;
        let description = read(&a.description)?;
        let lake = match a.lake.as_ref().or(f.lake.as_ref()) {
            Some(dir) => CodeLake::load_dir(dir).map_err(usage)?,
            None => CodeLake::default(),
        };
        let client = self.client(&a.client)?;
        let name = a.name.clone().unwrap_or_else(|| {
            a.description
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("generated")
                .to_string()
        });
        let config = SynthConfig {
            workflow_name: name,
            baseline_score: pick(a.baseline_score, f.baseline_score, 0.8),
            max_rounds: pick(a.max_rounds, f.max_rounds, 3),
            top_k: pick(a.top_k, f.top_k, DEFAULT_TOP_K),
            feedback: a.feedback.clone(),
        };
        let result = llm::synthesize(&description, &lake, client.as_ref(), &config).map_err(pipeline)?;
        let program_path = a.output.join("program.jsonl");
        let ir_path = a.output.join("workflow.json");
        write(&program_path, &result.program)?;
        write(&ir_path, &ir::serialize(&result.graph))?;
        if self.json {
            return Ok(to_json(&json!({
                "program": program_path,
                "ir": ir_path,
                "jobs": result.graph.len(),
                "edges": result.graph.edges().len(),
                "subtasks": result.subtasks,
            })));
        }
        let mut s = String::new();
        writeln!(s, "{:<3} {:<17} {:>6} {:>6}  {:<14} text", "#", "type", "rounds", "score", "status").unwrap();
        for r in &result.subtasks {
            let status = match r.calibration.status {
                CalibrationStatus::Passed => "passed",
                CalibrationStatus::BelowBaseline => "below-baseline",
            };
            writeln!(
                s,
                "{:<3} {:<17} {:>6} {:>6.3}  {:<14} {}",
                r.subtask.index,
                r.subtask.task_type.label(),
                r.calibration.rounds_used,
                r.calibration.score,
                status,
                r.subtask.text
            )
            .unwrap();
        }
        writeln!(
            s,
            "{} jobs, {} edges; wrote {} and {}",
            result.graph.len(),
            result.graph.edges().len(),
            program_path.display(),
            ir_path.display()
        )
        .unwrap();
        Ok(s)
    }

    fn tune(&self, a: &TuneArgs) -> Outcome<String> {
        let parse = |p: &Path, what: &str| -> Outcome<Value> {
            serde_json::from_str(&read(p)?)
                .with_context(|| format!("{what} {}", p.display()))
                .map_err(usage)
        };
        let data: DataCard = serde_json::from_value(parse(&a.data_card, "data card")?).map_err(usage)?;
        let model: ModelCard = serde_json::from_value(parse(&a.model_card, "model card")?).map_err(usage)?;
        let settings: Vec<Hyperparameters> = serde_json::from_value(parse(&a.hp, "hyperparameters")?).map_err(usage)?;
        let client = self.client(&a.client)?;
        let result = llm::tune(&data, &model, &settings, client.as_ref()).map_err(pipeline)?;
        if self.json {
            return Ok(to_json(&result));
        }
        let mut s = String::new();
        writeln!(s, "{:<3} {:>12}  setting", "#", result.metric).unwrap();
        for (i, log) in result.logs.iter().enumerate() {
            let mark = if i == result.selected_index { "*" } else { " " };
            let setting = serde_json::to_string(&log.hyperparameters).expect("settings serialize");
            writeln!(s, "{i:<2}{mark} {:>12.4}  {setting}", log.final_metric()).unwrap();
        }
        writeln!(
            s,
            "selected setting {} ({} {})",
            result.selected_index,
            match result.direction {
                llm::MetricDirection::Maximize => "max",
                llm::MetricDirection::Minimize => "min",
            },
            result.metric
        )
        .unwrap();
        Ok(s)
    }

    fn fixture(&self, name: &str, output: &Path) -> Outcome<String> {
        let g = fixtures::all()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, g)| g)
            .ok_or_else(|| {
                let names: Vec<&str> = fixtures::all().iter().map(|(n, _)| *n).collect();
                usage(anyhow!("unknown fixture `{name}` (available: {})", names.join(", ")))
            })?;
        write(output, &ir::serialize(&g))?;
        if self.json {
            return Ok(to_json(&json!({ "fixture": name, "path": output, "jobs": g.len() })));
        }
        Ok(format!("{} ({} jobs) -> {}\n", name, g.len(), output.display()))
    }
}

fn per_policy(trace: &Path, policy: CachePolicy) -> PathBuf {
    let stem = trace.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = trace.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    trace.with_file_name(format!("{stem}-{}.{ext}", policy.as_str()))
}
