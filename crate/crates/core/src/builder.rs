//! Programmatic workflow construction.
//!
//! Steps added one after another are chained in call order (implicit mode)
//! until the first [`Builder::dag`] or [`Builder::set_dependencies`] call,
//! after which only explicit, data and condition edges are added.
//!
//! ```
//! use wfopt_core::builder::{Builder, ConditionExpr, Step};
//!
//! let mut b = Builder::new("coin");
//! let flip = b.run(Step::script("python:alpine3.6", "print('heads')").name("flip")).unwrap();
//! b.when(ConditionExpr::equal(&flip, "heads"), |b| b.run(Step::container("alpine:3.6").name("heads")))
//!     .unwrap();
//! let graph = b.build().unwrap();
//! assert_eq!(graph.edges().len(), 1);
//! ```

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ir::{
    self, ArtifactKind, ArtifactMeta, CompareKind, Condition, JobSpec, LoopSpec, ValidationReport, WorkflowGraph,
    DEFAULT_MAX_ITERATIONS,
};

pub const SCRIPT_RUNNER: &str = "python";

/// Deferred step constructor, as taken by [`Builder::concurrent`].
pub type StepFn<'a> = Box<dyn FnOnce(&mut Builder) -> Result<StepHandle, BuildError> + 'a>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("the workflow has already been built")]
    Finalized,
    #[error("script step `{0}` has an empty source")]
    EmptySource(String),
    #[error("job `{step}` needs at least one replica per role")]
    ZeroReplicas { step: String },
    #[error("{0} needs at least one item")]
    Empty(&'static str),
    #[error("a condition needs a step output on one side and a literal on the other")]
    BadCondition,
    #[error("loop condition is missing")]
    MissingCondition,
    #[error("loops cannot be nested")]
    NestedLoop,
    #[error("{construct} body must add exactly one step, added {added}")]
    Body { construct: &'static str, added: usize },
    #[error("unknown step `{0}`")]
    UnknownStep(String),
    #[error("unknown artifact `{0}`")]
    UnknownArtifact(String),
    #[error("artifact `{artifact}` is consumed by `{step}` before any step produces it")]
    ConsumedBeforeProduced { artifact: String, step: String },
    #[error("artifact `{artifact}` is already produced by `{producer}`, cannot also be produced by `{step}`")]
    AlreadyProduced {
        artifact: String,
        producer: String,
        step: String,
    },
    #[error("invalid step: {0}")]
    InvalidStep(String),
    #[error("invalid workflow: {0}")]
    Invalid(ValidationReport),
}

/// Reference to a step already in the graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepHandle {
    name: String,
}

impl StepHandle {
    pub fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Step(String),
    /// The result of the step the condition is attached to (loops only).
    Output,
    Literal(String),
}

impl From<&StepHandle> for Operand {
    fn from(h: &StepHandle) -> Self {
        Operand::Step(h.name.clone())
    }
}

impl From<&str> for Operand {
    fn from(s: &str) -> Self {
        Operand::Literal(s.to_string())
    }
}

impl From<String> for Operand {
    fn from(s: String) -> Self {
        Operand::Literal(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionExpr {
    pub kind: CompareKind,
    pub left: Operand,
    pub right: Operand,
}

impl ConditionExpr {
    pub fn equal(left: impl Into<Operand>, right: impl Into<Operand>) -> Self {
        ConditionExpr {
            kind: CompareKind::Equal,
            left: left.into(),
            right: right.into(),
        }
    }

    pub fn not_equal(left: impl Into<Operand>, right: impl Into<Operand>) -> Self {
        ConditionExpr {
            kind: CompareKind::NotEqual,
            left: left.into(),
            right: right.into(),
        }
    }

    /// Compare the guarded step's own result, as loop conditions do.
    pub fn output(kind: CompareKind, value: impl Into<String>) -> Self {
        ConditionExpr {
            kind,
            left: Operand::Output,
            right: Operand::Literal(value.into()),
        }
    }

    /// (reference, literal) with the operands in either order.
    fn split(&self) -> Result<(&Operand, &str), BuildError> {
        match (&self.left, &self.right) {
            (r @ (Operand::Step(_) | Operand::Output), Operand::Literal(v))
            | (Operand::Literal(v), r @ (Operand::Step(_) | Operand::Output)) => Ok((r, v)),
            _ => Err(BuildError::BadCondition),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum StepKind {
    Container,
    Script(String),
    Job(BTreeMap<String, u32>),
}

/// Description of a step not yet added to a workflow.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    kind: StepKind,
    name: Option<String>,
    image: String,
    command: Vec<String>,
    args: Vec<String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    after: Vec<String>,
    cpu_cores: f64,
    memory_bytes: u64,
    runtime_seconds: f64,
}

impl Step {
    pub fn step_name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    fn base(kind: StepKind, image: impl Into<String>) -> Self {
        Step {
            kind,
            name: None,
            image: image.into(),
            command: Vec::new(),
            args: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            after: Vec::new(),
            cpu_cores: JobSpec::DEFAULT_CPU_CORES,
            memory_bytes: JobSpec::DEFAULT_MEMORY_BYTES,
            runtime_seconds: JobSpec::DEFAULT_RUNTIME_SECONDS,
        }
    }

    pub fn container(image: impl Into<String>) -> Self {
        Self::base(StepKind::Container, image)
    }

    /// The source is kept verbatim and run by [`SCRIPT_RUNNER`].
    pub fn script(image: impl Into<String>, source: impl Into<String>) -> Self {
        let mut s = Self::base(StepKind::Script(source.into()), image);
        s.command = vec![SCRIPT_RUNNER.to_string()];
        s
    }

    /// Distributed job with a replica count per role, e.g. `ps` and `worker`.
    pub fn job<I, S>(image: impl Into<String>, replicas: I) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let roles = replicas.into_iter().map(|(r, n)| (r.into(), n)).collect();
        Self::base(StepKind::Job(roles), image)
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn command<I, S>(mut self, command: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.command = command.into_iter().map(Into::into).collect();
        self
    }

    pub fn args<I, S>(mut self, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.args = args.into_iter().map(Into::into).collect();
        self
    }

    pub fn input(mut self, artifact: &ArtifactMeta) -> Self {
        self.inputs.push(artifact.id.clone());
        self
    }

    pub fn output(mut self, artifact: &ArtifactMeta) -> Self {
        self.outputs.push(artifact.id.clone());
        self
    }

    pub fn input_id(mut self, id: impl Into<String>) -> Self {
        self.inputs.push(id.into());
        self
    }

    pub fn output_id(mut self, id: impl Into<String>) -> Self {
        self.outputs.push(id.into());
        self
    }

    /// Explicit predecessor; replaces the implicit call-order edge.
    pub fn after(mut self, step: &StepHandle) -> Self {
        self.after.push(step.name.clone());
        self
    }

    pub fn after_name(mut self, step: impl Into<String>) -> Self {
        self.after.push(step.into());
        self
    }

    pub fn cpu(mut self, cores: f64) -> Self {
        self.cpu_cores = cores;
        self
    }

    pub fn memory(mut self, bytes: u64) -> Self {
        self.memory_bytes = bytes;
        self
    }

    pub fn runtime(mut self, seconds: f64) -> Self {
        self.runtime_seconds = seconds;
        self
    }

    fn default_name(&self) -> String {
        if let StepKind::Script(_) = self.kind {
            return "script".into();
        }
        let last = self.image.rsplit('/').next().unwrap_or_default();
        let stem = last.split([':', '@']).next().unwrap_or_default();
        let slug: String = stem
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
            .collect();
        let slug = slug.trim_matches('-');
        if slug.is_empty() {
            "step".into()
        } else {
            slug.to_string()
        }
    }
}

#[derive(Debug, Default)]
struct Frame {
    preds: Vec<String>,
    condition: Option<Condition>,
    looping: Option<LoopSpec>,
    added: Vec<String>,
}

#[derive(Debug, Clone)]
struct Declared {
    kind: ArtifactKind,
    path: String,
    size_bytes: u64,
    producer: Option<String>,
}

/// Accumulates a [`WorkflowGraph`] from builder calls. Single owner; not
/// meant for concurrent mutation.
#[derive(Debug)]
pub struct Builder {
    graph: WorkflowGraph,
    cursor: Vec<String>,
    /// Condition source shared by the steps currently in `cursor`, if they
    /// are sibling branches of one `when` fan-out.
    cursor_guard: Option<String>,
    explicit: bool,
    finalized: bool,
    frames: Vec<Frame>,
    declared: BTreeMap<String, Declared>,
    next_artifact: usize,
}

impl Builder {
    pub fn new(name: impl Into<String>) -> Self {
        Builder {
            graph: WorkflowGraph::new(name),
            cursor: Vec::new(),
            cursor_guard: None,
            explicit: false,
            finalized: false,
            frames: Vec::new(),
            declared: BTreeMap::new(),
            next_artifact: 0,
        }
    }

    pub fn is_explicit(&self) -> bool {
        self.explicit
    }

    pub fn graph(&self) -> &WorkflowGraph {
        &self.graph
    }

    /// The graph so far including every produced artifact.
    pub fn snapshot(&self) -> WorkflowGraph {
        let mut graph = self.graph.clone();
        for (id, d) in &self.declared {
            if d.producer.is_some() {
                graph.add_artifact(meta(id, d));
            }
        }
        graph
    }

    pub fn config_mut(&mut self) -> &mut BTreeMap<String, String> {
        self.graph.config_mut()
    }

    fn open(&self) -> Result<(), BuildError> {
        if self.finalized {
            Err(BuildError::Finalized)
        } else {
            Ok(())
        }
    }

    /// Register an artifact named `artifact-<n>`.
    pub fn create_artifact(
        &mut self,
        kind: ArtifactKind,
        path: impl Into<String>,
        size_hint: Option<u64>,
    ) -> Result<ArtifactMeta, BuildError> {
        self.next_artifact += 1;
        let mut id = format!("artifact-{}", self.next_artifact);
        while self.declared.contains_key(&id) {
            self.next_artifact += 1;
            id = format!("artifact-{}", self.next_artifact);
        }
        self.create_named_artifact(id, kind, path, size_hint)
    }

    pub fn create_named_artifact(
        &mut self,
        id: impl Into<String>,
        kind: ArtifactKind,
        path: impl Into<String>,
        size_hint: Option<u64>,
    ) -> Result<ArtifactMeta, BuildError> {
        self.open()?;
        let id = id.into();
        if id.is_empty() {
            return Err(BuildError::InvalidStep("artifact id is empty".into()));
        }
        if let Some(d) = self.declared.get(&id) {
            return Ok(meta(&id, d));
        }
        let d = Declared {
            kind,
            path: path.into(),
            size_bytes: size_hint.unwrap_or(0),
            producer: None,
        };
        let m = meta(&id, &d);
        self.declared.insert(id, d);
        Ok(m)
    }

    pub fn run_container<I, S>(&mut self, image: &str, command: I, step_name: Option<&str>) -> Result<StepHandle, BuildError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut step = Step::container(image).command(command);
        step.name = step_name.map(str::to_string);
        self.run(step)
    }

    pub fn run_script(&mut self, image: &str, source: &str, step_name: Option<&str>) -> Result<StepHandle, BuildError> {
        let mut step = Step::script(image, source);
        step.name = step_name.map(str::to_string);
        self.run(step)
    }

    pub fn run_job<I, S>(
        &mut self,
        image: &str,
        replicas: I,
        command: &[&str],
        step_name: Option<&str>,
    ) -> Result<StepHandle, BuildError>
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let mut step = Step::job(image, replicas).command(command.iter().copied());
        step.name = step_name.map(str::to_string);
        self.run(step)
    }

    /// Add one step. Its implicit predecessors are the cursor (or, inside a
    /// construct, the construct's anchor); an `after` list replaces them.
    pub fn run(&mut self, step: Step) -> Result<StepHandle, BuildError> {
        self.open()?;
        let base = step.name.clone().unwrap_or_else(|| step.default_name());
        let name = self.unique_name(&base);
        let job = self.job_from(&name, step.clone())?;

        let (implicit, condition, looping) = match self.frames.last() {
            Some(f) => (f.preds.clone(), f.condition.clone(), f.looping.clone()),
            None if self.explicit => (Vec::new(), None, None),
            None => (self.cursor.clone(), None, None),
        };
        let preds = if step.after.is_empty() { implicit } else { step.after.clone() };
        for p in &preds {
            if !self.graph.contains_job(p) {
                return Err(BuildError::UnknownStep(p.clone()));
            }
        }
        let data = self.wire_artifacts(&name, &job)?;

        let mut job = job;
        job.condition = condition;
        job.loop_spec = looping;
        self.graph.add_job(job);
        for o in &step.outputs {
            if let Some(d) = self.declared.get_mut(o) {
                d.producer = Some(name.clone());
            }
        }
        for p in preds.iter().chain(data.iter()) {
            self.graph.add_edge(p.clone(), name.clone());
        }
        match self.frames.last_mut() {
            Some(f) => f.added.push(name.clone()),
            None => {
                self.cursor = vec![name.clone()];
                self.cursor_guard = None;
            }
        }
        Ok(StepHandle { name })
    }

    fn job_from(&self, name: &str, step: Step) -> Result<JobSpec, BuildError> {
        let mut job = JobSpec::new(name, step.image);
        job.command = step.command;
        job.args = step.args;
        job.cpu_cores = step.cpu_cores;
        job.memory_bytes = step.memory_bytes;
        job.runtime_seconds = step.runtime_seconds;
        job.inputs = step.inputs;
        job.outputs = step.outputs;
        match step.kind {
            StepKind::Container => {}
            StepKind::Script(source) => {
                if source.is_empty() {
                    return Err(BuildError::EmptySource(name.to_string()));
                }
                job.script = Some(source);
            }
            StepKind::Job(roles) => {
                if roles.is_empty() || roles.values().any(|&n| n == 0) {
                    return Err(BuildError::ZeroReplicas { step: name.to_string() });
                }
                job.replicas = roles;
            }
        }
        if !(job.cpu_cores > 0.0) || job.memory_bytes == 0 || !(job.runtime_seconds >= 0.0) {
            return Err(BuildError::InvalidStep(format!(
                "`{name}` needs positive cpu and memory and a non-negative runtime"
            )));
        }
        Ok(job)
    }

    /// Check the step's artifact wiring; returns producers it depends on.
    fn wire_artifacts(&self, name: &str, job: &JobSpec) -> Result<Vec<String>, BuildError> {
        let mut producers = Vec::new();
        for id in &job.inputs {
            let d = self.declared.get(id).ok_or_else(|| BuildError::UnknownArtifact(id.clone()))?;
            match &d.producer {
                Some(p) => producers.push(p.clone()),
                None => {
                    return Err(BuildError::ConsumedBeforeProduced {
                        artifact: id.clone(),
                        step: name.to_string(),
                    })
                }
            }
        }
        for id in &job.outputs {
            let d = self.declared.get(id).ok_or_else(|| BuildError::UnknownArtifact(id.clone()))?;
            if let Some(p) = &d.producer {
                return Err(BuildError::AlreadyProduced {
                    artifact: id.clone(),
                    producer: p.clone(),
                    step: name.to_string(),
                });
            }
            if job.inputs.contains(id) {
                return Err(BuildError::ConsumedBeforeProduced {
                    artifact: id.clone(),
                    step: name.to_string(),
                });
            }
        }
        Ok(producers)
    }

    fn unique_name(&self, base: &str) -> String {
        if !self.graph.contains_job(base) {
            return base.to_string();
        }
        (2..)
            .map(|k| format!("{base}-{k}"))
            .find(|n| !self.graph.contains_job(n))
            .expect("unbounded suffixes")
    }

    /// Run `body` inside a frame; the body must add exactly one step.
    fn single(
        &mut self,
        construct: &'static str,
        frame: Frame,
        body: impl FnOnce(&mut Self) -> Result<StepHandle, BuildError>,
    ) -> Result<StepHandle, BuildError> {
        self.frames.push(frame);
        let out = body(self);
        let frame = self.frames.pop().expect("frame pushed above");
        let handle = out?;
        if frame.added.len() != 1 {
            return Err(BuildError::Body {
                construct,
                added: frame.added.len(),
            });
        }
        Ok(handle)
    }

    /// Add a step guarded by `cond`, depending on the condition's source.
    /// Consecutive branches off the same source become the new cursor
    /// together, so a following step joins them.
    pub fn when(
        &mut self,
        cond: ConditionExpr,
        body: impl FnOnce(&mut Self) -> Result<StepHandle, BuildError>,
    ) -> Result<StepHandle, BuildError> {
        self.open()?;
        let (source, value) = match cond.split()? {
            (Operand::Step(s), v) => (s.clone(), v.to_string()),
            _ => return Err(BuildError::BadCondition),
        };
        if !self.graph.contains_job(&source) {
            return Err(BuildError::UnknownStep(source));
        }
        let frame = Frame {
            preds: vec![source.clone()],
            condition: Some(Condition {
                source: source.clone(),
                kind: cond.kind,
                value,
            }),
            looping: self.frames.last().and_then(|f| f.looping.clone()),
            added: Vec::new(),
        };
        let handle = self.single("when", frame, body)?;
        self.record_sibling(&handle, Some(source));
        Ok(handle)
    }

    /// Add a step that re-runs while its own result satisfies `cond`, at most
    /// `max_iterations` times (default 100). The graph stays acyclic.
    pub fn exec_while(
        &mut self,
        cond: ConditionExpr,
        max_iterations: Option<u32>,
        body: impl FnOnce(&mut Self) -> Result<StepHandle, BuildError>,
    ) -> Result<StepHandle, BuildError> {
        self.open()?;
        if self.frames.iter().any(|f| f.looping.is_some()) {
            return Err(BuildError::NestedLoop);
        }
        let value = match cond.split() {
            Ok((Operand::Output, v)) if !v.is_empty() => v.to_string(),
            Ok((Operand::Step(_), _)) => return Err(BuildError::BadCondition),
            _ => return Err(BuildError::MissingCondition),
        };
        let max_iterations = max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS);
        if max_iterations == 0 {
            return Err(BuildError::InvalidStep("loop bound must be at least 1".into()));
        }
        let parent = self.frames.last();
        let frame = Frame {
            preds: match parent {
                Some(f) => f.preds.clone(),
                None if self.explicit => Vec::new(),
                None => self.cursor.clone(),
            },
            condition: parent.and_then(|f| f.condition.clone()),
            looping: Some(LoopSpec {
                kind: cond.kind,
                value,
                max_iterations,
            }),
            added: Vec::new(),
        };
        let handle = self.single("exec_while", frame, body)?;
        self.record_sibling(&handle, None);
        Ok(handle)
    }

    /// One sibling step per item; siblings share the current predecessors
    /// and have no edges among themselves.
    pub fn map<T>(
        &mut self,
        items: impl IntoIterator<Item = T>,
        mut f: impl FnMut(&mut Self, T) -> Result<StepHandle, BuildError>,
    ) -> Result<Vec<StepHandle>, BuildError> {
        self.open()?;
        let mut items: Vec<Option<T>> = items.into_iter().map(Some).collect();
        if items.is_empty() {
            return Err(BuildError::Empty("map"));
        }
        self.siblings("map", items.len(), |b, i| f(b, items[i].take().expect("each item used once")))
    }

    pub fn concurrent(&mut self, bodies: Vec<StepFn<'_>>) -> Result<Vec<StepHandle>, BuildError> {
        self.open()?;
        if bodies.is_empty() {
            return Err(BuildError::Empty("concurrent"));
        }
        let mut bodies: Vec<Option<StepFn<'_>>> = bodies.into_iter().map(Some).collect();
        self.siblings("concurrent", bodies.len(), |b, i| {
            (bodies[i].take().expect("each body used once"))(b)
        })
    }

    fn siblings(
        &mut self,
        construct: &'static str,
        count: usize,
        mut body: impl FnMut(&mut Self, usize) -> Result<StepHandle, BuildError>,
    ) -> Result<Vec<StepHandle>, BuildError> {
        let parent = self.frames.last();
        let preds = match parent {
            Some(f) => f.preds.clone(),
            None if self.explicit => Vec::new(),
            None => self.cursor.clone(),
        };
        let condition = parent.and_then(|f| f.condition.clone());
        let looping = parent.and_then(|f| f.looping.clone());
        let mut handles = Vec::with_capacity(count);
        for i in 0..count {
            let frame = Frame {
                preds: preds.clone(),
                condition: condition.clone(),
                looping: looping.clone(),
                added: Vec::new(),
            };
            handles.push(self.single(construct, frame, |b| body(b, i))?);
        }
        match self.frames.last_mut() {
            Some(f) => f.added.extend(handles.iter().map(|h| h.name.clone())),
            None => {
                self.cursor = handles.iter().map(|h| h.name.clone()).collect();
                self.cursor_guard = None;
            }
        }
        Ok(handles)
    }

    fn record_sibling(&mut self, handle: &StepHandle, guard: Option<String>) {
        if let Some(f) = self.frames.last_mut() {
            f.added.push(handle.name.clone());
            return;
        }
        match (&guard, &self.cursor_guard) {
            (Some(g), Some(c)) if g == c => self.cursor.push(handle.name.clone()),
            _ => self.cursor = vec![handle.name.clone()],
        }
        self.cursor_guard = guard;
    }

    /// Explicit edges. Each list is a path: `[a]` declares a node, `[a, b]`
    /// an edge, longer lists a chain. A step whose name is already in the
    /// graph refers to that node instead of adding a new one.
    pub fn dag(&mut self, paths: Vec<Vec<Step>>) -> Result<(), BuildError> {
        self.open()?;
        self.explicit = true;
        for path in paths {
            let mut prev: Option<String> = None;
            for step in path {
                let name = match &step.name {
                    Some(n) if self.graph.contains_job(n) => n.clone(),
                    _ => self.run(step.clone())?.name,
                };
                if let Some(p) = prev {
                    self.graph.add_edge(p, name.clone());
                }
                prev = Some(name);
            }
        }
        Ok(())
    }

    pub fn set_dependencies(&mut self, from: &StepHandle, to: &StepHandle) -> Result<(), BuildError> {
        self.set_dependencies_by_name(&from.name, &to.name)
    }

    pub fn set_dependencies_by_name(&mut self, from: &str, to: &str) -> Result<(), BuildError> {
        self.open()?;
        self.explicit = true;
        for s in [from, to] {
            if !self.graph.contains_job(s) {
                return Err(BuildError::UnknownStep(s.to_string()));
            }
        }
        self.graph.add_edge(from, to);
        Ok(())
    }

    /// Validate and freeze. Later calls fail with [`BuildError::Finalized`].
    pub fn build(&mut self) -> Result<WorkflowGraph, BuildError> {
        self.open()?;
        let graph = self.snapshot();
        let report = ir::validate(&graph);
        if !report.is_valid() {
            return Err(BuildError::Invalid(report));
        }
        self.finalized = true;
        Ok(graph)
    }
}

fn meta(id: &str, d: &Declared) -> ArtifactMeta {
    ArtifactMeta {
        id: id.to_string(),
        kind: d.kind,
        size_bytes: d.size_bytes,
        producer: d.producer.clone().unwrap_or_default(),
        path: d.path.clone(),
    }
}

/// Names of every step in `handles`.
pub fn names(handles: &[StepHandle]) -> BTreeSet<&str> {
    handles.iter().map(|h| h.name()).collect()
}
