//! Artifact cache: importance-scored admission with score-ordered eviction,
//! plus the NO / ALL / FIFO / LRU baselines used for comparison.

mod score;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::ir::{IrError, Topology, WorkflowGraph};

pub use score::{caching_cost, importance, reconstruction_cost, reuse_value, score_artifact, ScoreRecord};
pub(crate) use score::score_with;

pub const DEFAULT_ALPHA: f64 = 1.5;
pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_LAYERS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CacheError {
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error("invalid cache configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CacheConfig {
    pub alpha: f64,
    pub beta: f64,
    pub capacity_bytes: u64,
    pub n_layers: usize,
}

impl CacheConfig {
    pub fn new(alpha: f64, beta: f64, capacity_bytes: u64, n_layers: usize) -> Result<Self, CacheError> {
        if !(alpha.is_finite() && alpha >= 0.0) || !(beta.is_finite() && beta >= 0.0) {
            return Err(CacheError::InvalidConfig(format!(
                "weights must be finite and non-negative (alpha={alpha}, beta={beta})"
            )));
        }
        if capacity_bytes == 0 {
            return Err(CacheError::InvalidConfig("capacity must be positive".into()));
        }
        if n_layers == 0 {
            return Err(CacheError::InvalidConfig("n_layers must be at least 1".into()));
        }
        Ok(CacheConfig {
            alpha,
            beta,
            capacity_bytes,
            n_layers,
        })
    }

    pub fn with_capacity(capacity_bytes: u64) -> Result<Self, CacheError> {
        Self::new(DEFAULT_ALPHA, DEFAULT_BETA, capacity_bytes, DEFAULT_LAYERS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CachePolicy {
    No,
    All,
    Importance,
    Fifo,
    Lru,
}

impl CachePolicy {
    pub const ALL_POLICIES: [CachePolicy; 5] = [
        CachePolicy::No,
        CachePolicy::All,
        CachePolicy::Importance,
        CachePolicy::Fifo,
        CachePolicy::Lru,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CachePolicy::No => "NO",
            CachePolicy::All => "ALL",
            CachePolicy::Importance => "IMPORTANCE",
            CachePolicy::Fifo => "FIFO",
            CachePolicy::Lru => "LRU",
        }
    }
}

impl fmt::Display for CachePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CachePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NO" | "NONE" => Ok(CachePolicy::No),
            "ALL" => Ok(CachePolicy::All),
            "IMPORTANCE" | "COULER" => Ok(CachePolicy::Importance),
            "FIFO" => Ok(CachePolicy::Fifo),
            "LRU" => Ok(CachePolicy::Lru),
            _ => Err(format!("unknown cache policy `{s}` (expected NO, ALL, IMPORTANCE, FIFO or LRU)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheEventKind {
    Admit,
    Evict,
    Reject,
    Hit,
    Miss,
}

impl CacheEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CacheEventKind::Admit => "admit",
            CacheEventKind::Evict => "evict",
            CacheEventKind::Reject => "reject",
            CacheEventKind::Hit => "hit",
            CacheEventKind::Miss => "miss",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheEvent {
    pub time: f64,
    pub artifact: String,
    pub kind: CacheEventKind,
    pub score: Option<f64>,
    /// Occupancy after the event.
    pub used_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Larger than the whole cache.
    Oversized,
    /// Scored lowest among itself and the residents.
    LowestScore,
    /// The policy never caches.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    Admitted { evicted: Vec<String> },
    Rejected { reason: RejectReason },
    AlreadyCached,
}

impl Decision {
    pub fn is_admitted(&self) -> bool {
        matches!(self, Decision::Admitted { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    size_bytes: u64,
    admitted: u64,
    last_used: u64,
    record: Option<ScoreRecord>,
}

/// Cache contents and event trace. One instance serves every policy; the
/// policy is chosen per offer.
#[derive(Debug, Clone)]
pub struct CacheState {
    config: CacheConfig,
    entries: BTreeMap<String, Entry>,
    used_bytes: u64,
    peak_bytes: u64,
    tick: u64,
    now: f64,
    events: Vec<CacheEvent>,
    started: BTreeSet<String>,
}

impl CacheState {
    pub fn new(config: CacheConfig) -> Self {
        CacheState {
            config,
            entries: BTreeMap::new(),
            used_bytes: 0,
            peak_bytes: 0,
            tick: 0,
            now: 0.0,
            events: Vec::new(),
            started: BTreeSet::new(),
        }
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn set_time(&mut self, now: f64) {
        self.now = now;
    }

    pub fn used_bytes(&self) -> u64 {
        self.used_bytes
    }

    pub fn peak_bytes(&self) -> u64 {
        self.peak_bytes
    }

    pub fn contains(&self, artifact: &str) -> bool {
        self.entries.contains_key(artifact)
    }

    pub fn residents(&self) -> BTreeSet<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn events(&self) -> &[CacheEvent] {
        &self.events
    }

    /// Score records of resident artifacts admitted under the importance
    /// policy, as last computed.
    pub fn scores(&self) -> Vec<&ScoreRecord> {
        self.entries.values().filter_map(|e| e.record.as_ref()).collect()
    }

    /// Record that `step` has started. Its reads are done, so it no longer
    /// adds reuse value to any artifact scored afterwards.
    pub fn mark_started(&mut self, step: &str) {
        self.started.insert(step.to_string());
    }

    /// A read of `artifact`: a hit refreshes its recency.
    pub fn access(&mut self, artifact: &str) -> bool {
        self.tick += 1;
        let tick = self.tick;
        let hit = match self.entries.get_mut(artifact) {
            Some(e) => {
                e.last_used = tick;
                true
            }
            None => false,
        };
        let kind = if hit { CacheEventKind::Hit } else { CacheEventKind::Miss };
        self.log(artifact, kind, None);
        hit
    }

    /// Offer a freshly produced artifact to the cache under `policy`.
    pub fn offer(&mut self, policy: CachePolicy, graph: &WorkflowGraph, artifact: &str) -> Result<Decision, CacheError> {
        match policy {
            CachePolicy::Importance => self.on_artifact_produced(graph, artifact),
            _ => {
                let size = artifact_size(graph, artifact)?;
                Ok(self.baseline_step(policy, artifact, size))
            }
        }
    }

    /// Importance admission. If the artifact fits it is admitted. Otherwise
    /// the artifact and every resident are scored and the lowest
    /// (score, id) is tentatively evicted, rescoring after each removal,
    /// until the artifact fits. If the artifact itself is ever the lowest
    /// it is rejected and nothing is evicted.
    pub fn on_artifact_produced(&mut self, graph: &WorkflowGraph, artifact: &str) -> Result<Decision, CacheError> {
        let size = artifact_size(graph, artifact)?;
        if self.entries.contains_key(artifact) {
            return Ok(Decision::AlreadyCached);
        }
        if size > self.config.capacity_bytes {
            self.log(artifact, CacheEventKind::Reject, None);
            return Ok(Decision::Rejected {
                reason: RejectReason::Oversized,
            });
        }
        let topo = Topology::new(graph);
        let mut kept = self.residents();
        let mut record = score_with(graph, &topo, artifact, &kept, &self.started, &self.config)?;
        let mut free = self.config.capacity_bytes - self.used_bytes;
        let mut victims: Vec<(String, f64)> = Vec::new();
        let mut rescored: BTreeMap<String, ScoreRecord> = BTreeMap::new();
        while free < size {
            let mut lowest: Option<ScoreRecord> = None;
            for id in &kept {
                let r = score_with(graph, &topo, id, &kept, &self.started, &self.config)?;
                if lowest.as_ref().map_or(true, |l| ranks_below(&r, l)) {
                    lowest = Some(r.clone());
                }
                rescored.insert(id.clone(), r);
            }
            let lowest = match lowest {
                Some(l) if ranks_below(&l, &record) => l,
                _ => {
                    self.log(artifact, CacheEventKind::Reject, Some(record.score));
                    return Ok(Decision::Rejected {
                        reason: RejectReason::LowestScore,
                    });
                }
            };
            kept.remove(&lowest.artifact);
            free += self.entries[&lowest.artifact].size_bytes;
            victims.push((lowest.artifact.clone(), lowest.score));
            record = score_with(graph, &topo, artifact, &kept, &self.started, &self.config)?;
        }
        let evicted: Vec<String> = victims.iter().map(|(id, _)| id.clone()).collect();
        for (id, score) in victims {
            self.remove(&id, Some(score));
        }
        for (id, r) in rescored {
            if let Some(e) = self.entries.get_mut(&id) {
                e.record = Some(r);
            }
        }
        let score = record.score;
        self.insert(artifact, size, Some(record));
        self.log(artifact, CacheEventKind::Admit, Some(score));
        Ok(Decision::Admitted { evicted })
    }

    /// NO, ALL, FIFO and LRU. ALL ignores capacity.
    pub fn baseline_step(&mut self, policy: CachePolicy, artifact: &str, size_bytes: u64) -> Decision {
        if self.entries.contains_key(artifact) {
            return Decision::AlreadyCached;
        }
        let reject = |s: &mut Self, reason| {
            s.log(artifact, CacheEventKind::Reject, None);
            Decision::Rejected { reason }
        };
        match policy {
            CachePolicy::No => return reject(self, RejectReason::Disabled),
            CachePolicy::All => {}
            CachePolicy::Fifo | CachePolicy::Lru | CachePolicy::Importance => {
                if size_bytes > self.config.capacity_bytes {
                    return reject(self, RejectReason::Oversized);
                }
            }
        }
        let mut evicted = Vec::new();
        if policy != CachePolicy::All {
            while self.config.capacity_bytes - self.used_bytes < size_bytes {
                let victim = self
                    .entries
                    .iter()
                    .min_by_key(|(id, e)| match policy {
                        CachePolicy::Lru => (e.last_used, e.admitted, id.as_str()),
                        _ => (e.admitted, e.admitted, id.as_str()),
                    })
                    .map(|(id, _)| id.clone())
                    .expect("non-empty cache when over capacity");
                self.remove(&victim, None);
                evicted.push(victim);
            }
        }
        self.insert(artifact, size_bytes, None);
        self.log(artifact, CacheEventKind::Admit, None);
        Decision::Admitted { evicted }
    }

    /// Drop a resident chosen by an external controller. False if absent.
    pub fn evict(&mut self, artifact: &str) -> bool {
        let present = self.entries.contains_key(artifact);
        self.remove(artifact, None);
        present
    }

    /// Admit `artifact` if it fits in the free space, evicting nothing.
    pub fn admit_if_fits(&mut self, artifact: &str, size_bytes: u64) -> Decision {
        if self.entries.contains_key(artifact) {
            return Decision::AlreadyCached;
        }
        if self.config.capacity_bytes - self.used_bytes < size_bytes {
            self.log(artifact, CacheEventKind::Reject, None);
            return Decision::Rejected {
                reason: RejectReason::Oversized,
            };
        }
        self.insert(artifact, size_bytes, None);
        self.log(artifact, CacheEventKind::Admit, None);
        Decision::Admitted { evicted: Vec::new() }
    }

    fn insert(&mut self, artifact: &str, size_bytes: u64, record: Option<ScoreRecord>) {
        self.tick += 1;
        self.entries.insert(
            artifact.to_string(),
            Entry {
                size_bytes,
                admitted: self.tick,
                last_used: self.tick,
                record,
            },
        );
        self.used_bytes += size_bytes;
        self.peak_bytes = self.peak_bytes.max(self.used_bytes);
    }

    fn remove(&mut self, artifact: &str, score: Option<f64>) {
        if let Some(e) = self.entries.remove(artifact) {
            self.used_bytes -= e.size_bytes;
            self.log(artifact, CacheEventKind::Evict, score);
        }
    }

    fn log(&mut self, artifact: &str, kind: CacheEventKind, score: Option<f64>) {
        self.events.push(CacheEvent {
            time: self.now,
            artifact: artifact.to_string(),
            kind,
            score,
            used_bytes: self.used_bytes,
        });
    }
}

fn ranks_below(a: &ScoreRecord, b: &ScoreRecord) -> bool {
    a.score.total_cmp(&b.score).then_with(|| a.artifact.cmp(&b.artifact)) == Ordering::Less
}

fn artifact_size(graph: &WorkflowGraph, artifact: &str) -> Result<u64, CacheError> {
    graph
        .artifact(artifact)
        .map(|m| m.size_bytes)
        .ok_or_else(|| IrError::UnknownArtifact(artifact.to_string()).into())
}
