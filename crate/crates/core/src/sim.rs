//! Deterministic discrete-event execution of a workflow under a caching
//! policy.
//!
//! Jobs start as soon as their predecessors finish (and a slot is free when
//! a parallelism limit is set). A job's effective duration is the time to
//! read its inputs (cache hit or remote fetch, per byte) plus its runtime
//! times the number of loop iterations. Outputs are offered to the cache
//! when the job finishes. Ties are broken by ready time, then step name.
//!
//! Condition and loop outcomes come from scripted step results. A step with
//! no scripted result satisfies every comparison, so unscripted branches all
//! run and unscripted loops run to their bound.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::cache::{CacheConfig, CacheError, CachePolicy, CacheState, Decision, RejectReason};
use crate::ir::{self, IrError, Topology, WorkflowGraph};

pub const DEFAULT_IO_COST_PER_BYTE: f64 = 4e-9;
pub const DEFAULT_CACHE_READ_COST_PER_BYTE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub policy: CachePolicy,
    pub cache: CacheConfig,
    pub io_cost_per_byte: f64,
    pub cache_read_cost_per_byte: f64,
    pub parallelism_limit: Option<usize>,
    /// Result strings per step, one per iteration.
    pub step_results: BTreeMap<String, Vec<String>>,
}

impl SimConfig {
    pub fn new(policy: CachePolicy, cache: CacheConfig) -> Self {
        SimConfig {
            policy,
            cache,
            io_cost_per_byte: DEFAULT_IO_COST_PER_BYTE,
            cache_read_cost_per_byte: DEFAULT_CACHE_READ_COST_PER_BYTE,
            parallelism_limit: None,
            step_results: BTreeMap::new(),
        }
    }

    pub fn with_costs(mut self, io_cost_per_byte: f64, cache_read_cost_per_byte: f64) -> Self {
        self.io_cost_per_byte = io_cost_per_byte;
        self.cache_read_cost_per_byte = cache_read_cost_per_byte;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let (io, read) = (self.io_cost_per_byte, self.cache_read_cost_per_byte);
        if !(io.is_finite() && read.is_finite() && read >= 0.0 && io >= read) {
            return Err(SimError::InvalidConfig(format!(
                "need io_cost_per_byte >= cache_read_cost_per_byte >= 0 (got {io} and {read})"
            )));
        }
        if self.parallelism_limit == Some(0) {
            return Err(SimError::InvalidConfig("parallelism_limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimEventKind {
    Start,
    Skip,
    Hit,
    Miss,
    Produce,
    Finish,
}

impl SimEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SimEventKind::Start => "start",
            SimEventKind::Skip => "skip",
            SimEventKind::Hit => "hit",
            SimEventKind::Miss => "miss",
            SimEventKind::Produce => "produce",
            SimEventKind::Finish => "finish",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEvent {
    pub time: f64,
    pub step: String,
    pub event: SimEventKind,
    pub artifact: String,
    pub bytes: u64,
    pub policy_decision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobTimeline {
    pub step: String,
    pub start: f64,
    pub end: f64,
    pub iterations: u32,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub policy: CachePolicy,
    pub makespan_seconds: f64,
    pub peak_memory_bytes: u64,
    pub peak_cache_bytes: u64,
    pub hits: u64,
    pub misses: u64,
    pub hit_ratio: f64,
    pub jobs: Vec<JobTimeline>,
    #[serde(skip)]
    pub events: Vec<SimEvent>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Event trace as CSV with a header row.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "step", "event", "artifact", "bytes", "policy_decision"])?;
        for e in &self.events {
            w.write_record([
                format!("{}", e.time).as_str(),
                e.step.as_str(),
                e.event.as_str(),
                e.artifact.as_str(),
                e.bytes.to_string().as_str(),
                e.policy_decision.as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn trace_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_trace_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Decides what happens to each produced artifact. The default follows a
/// [`CachePolicy`]; tests substitute exhaustive or scripted controllers.
pub trait CacheController {
    fn offer(&mut self, state: &mut CacheState, graph: &WorkflowGraph, artifact: &str) -> Result<Decision, CacheError>;
}

impl CacheController for CachePolicy {
    fn offer(&mut self, state: &mut CacheState, graph: &WorkflowGraph, artifact: &str) -> Result<Decision, CacheError> {
        state.offer(*self, graph, artifact)
    }
}

pub fn simulate(graph: &WorkflowGraph, config: &SimConfig) -> Result<SimReport, SimError> {
    let mut policy = config.policy;
    simulate_with(graph, config, &mut policy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Finish {
    time: f64,
    job: usize,
}

impl Eq for Finish {}

impl Ord for Finish {
    // min-heap on (time, job)
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.job.cmp(&self.job))
    }
}

impl PartialOrd for Finish {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ready {
    time: f64,
    job: usize,
}

impl Eq for Ready {}

impl Ord for Ready {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then_with(|| self.job.cmp(&other.job))
    }
}

impl PartialOrd for Ready {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Run<'a> {
    graph: &'a WorkflowGraph,
    config: &'a SimConfig,
    topo: Topology<'a>,
    cache: CacheState,
    events: Vec<SimEvent>,
    timeline: Vec<Option<JobTimeline>>,
    /// Final result string, `None` when unscripted.
    results: Vec<Option<String>>,
    skipped: Vec<bool>,
    missing_preds: Vec<usize>,
    ready: BTreeSet<Ready>,
    running: BinaryHeap<Finish>,
    hits: u64,
    misses: u64,
}

impl<'a> Run<'a> {
    fn event(&mut self, time: f64, job: usize, event: SimEventKind, artifact: &str, bytes: u64, decision: String) {
        self.events.push(SimEvent {
            time,
            step: self.topo.names[job].to_string(),
            event,
            artifact: artifact.to_string(),
            bytes,
            policy_decision: decision,
        });
    }

    fn condition_holds(&self, job: usize) -> bool {
        let Some(cond) = &self.graph.jobs()[job].condition else {
            return true;
        };
        let Some(&src) = self.topo.index.get(cond.source.as_str()) else {
            return false;
        };
        if self.skipped[src] {
            return false;
        }
        match &self.results[src] {
            Some(r) => cond.kind.holds(r, &cond.value),
            None => true,
        }
    }

    /// Iterations to run and the final result string.
    fn unroll(&self, job: usize) -> (u32, Option<String>) {
        let spec = &self.graph.jobs()[job];
        let script = self.config.step_results.get(&spec.step_name).filter(|s| !s.is_empty());
        let result_at = |i: usize| script.map(|s| s[i.min(s.len() - 1)].clone());
        let Some(l) = &spec.loop_spec else {
            return (1, result_at(0));
        };
        let mut i = 0usize;
        loop {
            let r = result_at(i);
            let again = r.as_ref().map_or(true, |r| l.kind.holds(r, &l.value));
            if !again || i + 1 >= l.max_iterations as usize {
                return (i as u32 + 1, r);
            }
            i += 1;
        }
    }

    fn start(&mut self, job: usize, now: f64, controller: &mut dyn CacheController) -> Result<(), SimError> {
        self.cache.mark_started(self.topo.names[job]);
        if !self.condition_holds(job) {
            self.skipped[job] = true;
            self.event(now, job, SimEventKind::Skip, "", 0, String::new());
            self.timeline[job] = Some(JobTimeline {
                step: self.topo.names[job].to_string(),
                start: now,
                end: now,
                iterations: 0,
                skipped: true,
            });
            return self.complete(job, now, controller);
        }
        self.event(now, job, SimEventKind::Start, "", 0, String::new());
        let graph = self.graph;
        let spec = &graph.jobs()[job];
        let mut fetch = 0.0;
        self.cache.set_time(now);
        for id in &spec.inputs {
            let Some(meta) = graph.artifact(id) else { continue };
            let size = meta.size_bytes;
            let hit = self.cache.access(id);
            let (kind, per_byte) = if hit {
                self.hits += 1;
                (SimEventKind::Hit, self.config.cache_read_cost_per_byte)
            } else {
                self.misses += 1;
                (SimEventKind::Miss, self.config.io_cost_per_byte)
            };
            fetch += size as f64 * per_byte;
            self.event(now, job, kind, id, size, String::new());
        }
        let (iterations, result) = self.unroll(job);
        self.results[job] = result;
        let end = now + fetch + spec.runtime_seconds * f64::from(iterations);
        self.timeline[job] = Some(JobTimeline {
            step: spec.step_name.clone(),
            start: now,
            end,
            iterations,
            skipped: false,
        });
        self.running.push(Finish { time: end, job });
        Ok(())
    }

    fn complete(&mut self, job: usize, now: f64, controller: &mut dyn CacheController) -> Result<(), SimError> {
        if !self.skipped[job] {
            self.cache.set_time(now);
            let graph = self.graph;
            for id in &graph.jobs()[job].outputs {
                let size = graph.artifact(id).map_or(0, |m| m.size_bytes);
                let decision = controller.offer(&mut self.cache, graph, id)?;
                self.event(now, job, SimEventKind::Produce, id, size, describe(&decision));
            }
            self.event(now, job, SimEventKind::Finish, "", 0, String::new());
        }
        for i in 0..self.topo.succ[job].len() {
            let s = self.topo.succ[job][i];
            self.missing_preds[s] -= 1;
            if self.missing_preds[s] == 0 {
                self.ready.insert(Ready { time: now, job: s });
            }
        }
        Ok(())
    }
}

fn describe(decision: &Decision) -> String {
    match decision {
        Decision::Admitted { evicted } if evicted.is_empty() => "admit".into(),
        Decision::Admitted { evicted } => format!("admit;evict={}", evicted.join("|")),
        Decision::Rejected { reason } => format!(
            "reject:{}",
            match reason {
                RejectReason::Oversized => "oversized",
                RejectReason::LowestScore => "lowest_score",
                RejectReason::Disabled => "disabled",
            }
        ),
        Decision::AlreadyCached => "cached".into(),
    }
}

/// [`simulate`] with an explicit controller deciding cache admission.
pub fn simulate_with(
    graph: &WorkflowGraph,
    config: &SimConfig,
    controller: &mut dyn CacheController,
) -> Result<SimReport, SimError> {
    config.validate()?;
    ir::ensure_valid(graph)?;
    let topo = Topology::new(graph);
    let n = topo.len();
    let missing_preds: Vec<usize> = topo.pred.iter().map(Vec::len).collect();
    let ready = (0..n).filter(|&v| missing_preds[v] == 0).map(|job| Ready { time: 0.0, job }).collect();
    let mut run = Run {
        graph,
        config,
        topo,
        cache: CacheState::new(config.cache),
        events: Vec::new(),
        timeline: vec![None; n],
        results: vec![None; n],
        skipped: vec![false; n],
        missing_preds,
        ready,
        running: BinaryHeap::new(),
        hits: 0,
        misses: 0,
    };
    let limit = config.parallelism_limit.unwrap_or(usize::MAX);
    let mut now = 0.0f64;
    loop {
        while run.running.len() < limit {
            let Some(next) = run.ready.pop_first() else { break };
            run.start(next.job, now, controller)?;
        }
        let Some(first) = run.running.pop() else { break };
        now = first.time;
        let mut done = vec![first.job];
        while run.running.peek().is_some_and(|f| f.time == now) {
            done.push(run.running.pop().expect("peeked").job);
        }
        done.sort_unstable();
        for job in done {
            run.complete(job, now, controller)?;
        }
    }

    let jobs: Vec<JobTimeline> = run.timeline.into_iter().map(|t| t.expect("every job scheduled")).collect();
    let intervals: Vec<(f64, f64, u64)> = jobs
        .iter()
        .zip(graph.jobs())
        .filter(|(t, _)| !t.skipped)
        .map(|(t, j)| (t.start, t.end, j.memory_bytes))
        .collect();
    let makespan = jobs.iter().map(|t| t.end).fold(0.0, f64::max);
    let total = run.hits + run.misses;
    Ok(SimReport {
        policy: config.policy,
        makespan_seconds: makespan,
        peak_memory_bytes: ir::peak_overlap(&intervals),
        peak_cache_bytes: run.cache.peak_bytes(),
        hits: run.hits,
        misses: run.misses,
        hit_ratio: if total == 0 { 0.0 } else { run.hits as f64 / total as f64 },
        jobs,
        events: run.events,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRow {
    pub policy: CachePolicy,
    pub makespan_seconds: f64,
    pub peak_memory_bytes: u64,
    pub peak_cache_bytes: u64,
    pub hits: u64,
    pub misses: u64,
    pub hit_ratio: f64,
}

impl From<&SimReport> for PolicyRow {
    fn from(r: &SimReport) -> Self {
        PolicyRow {
            policy: r.policy,
            makespan_seconds: r.makespan_seconds,
            peak_memory_bytes: r.peak_memory_bytes,
            peak_cache_bytes: r.peak_cache_bytes,
            hits: r.hits,
            misses: r.misses,
            hit_ratio: r.hit_ratio,
        }
    }
}

/// One simulation per policy, run in parallel; rows follow `policies`.
pub fn compare_policies(
    graph: &WorkflowGraph,
    base: &SimConfig,
    policies: &[CachePolicy],
) -> Result<Vec<SimReport>, SimError> {
    if policies.is_empty() {
        return Err(SimError::InvalidConfig("no policies to compare".into()));
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = policies
            .iter()
            .map(|&policy| {
                let config = SimConfig { policy, ..base.clone() };
                scope.spawn(move || simulate(graph, &config))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}
