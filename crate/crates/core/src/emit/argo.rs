//! Argo-Workflows-shaped YAML.
//!
//! The document is assembled from independent fragments (header, one dag
//! task per job, one template block per job) so that [`SizeTracker`] can keep
//! the exact byte length of a growing job subset without re-rendering it.
//! Every scalar is written as a JSON string literal, which is valid YAML.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::ir::{JobSpec, Topology, WorkflowGraph};

pub(crate) const ENTRYPOINT: &str = "main";

fn q(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub(crate) fn template_name(step: &str) -> String {
    format!("tmpl-{step}")
}

pub(crate) fn loop_template_name(step: &str) -> String {
    format!("loop-{step}")
}

fn artifact_path(graph: &WorkflowGraph, id: &str) -> String {
    match graph.artifact(id) {
        Some(meta) if !meta.path.is_empty() => meta.path.clone(),
        _ => format!("/tmp/artifacts/{id}"),
    }
}

pub(crate) fn header(name: &str, imports: &[(&str, String)]) -> String {
    let mut s = String::new();
    s.push_str("apiVersion: argoproj.io/v1alpha1\n");
    s.push_str("kind: Workflow\n");
    s.push_str("metadata:\n");
    let _ = writeln!(s, "  generateName: {}", q(&format!("{name}-")));
    s.push_str("spec:\n");
    let _ = writeln!(s, "  entrypoint: {ENTRYPOINT}");
    if !imports.is_empty() {
        s.push_str("  arguments:\n    artifacts:\n");
        for (id, path) in imports {
            s.push_str(&import_line(id, path));
        }
    }
    s
}

pub(crate) fn import_line(id: &str, path: &str) -> String {
    format!("      - name: {}\n        path: {}\n", q(id), q(path))
}

pub(crate) const EMPTY_TEMPLATES: &str = "  templates: []\n";

pub(crate) fn dag_head() -> String {
    format!("  templates:\n    - name: {ENTRYPOINT}\n      dag:\n        tasks:\n")
}

/// One dag task. `deps` are the step's predecessors inside the document;
/// `local_producer(id)` yields the producing step of an input artifact when
/// that producer is inside the document.
pub(crate) fn task(job: &JobSpec, deps: &[&str], local_producer: impl Fn(&str) -> Option<String>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "          - name: {}", q(&job.step_name));
    let template = if job.loop_spec.is_some() {
        loop_template_name(&job.step_name)
    } else {
        template_name(&job.step_name)
    };
    let _ = writeln!(s, "            template: {}", q(&template));
    if !deps.is_empty() {
        s.push_str("            dependencies:\n");
        for d in deps {
            let _ = writeln!(s, "              - {}", q(d));
        }
    }
    if let Some(cond) = &job.condition {
        let expr = format!(
            "{{{{tasks.{}.outputs.result}}}} {} {}",
            cond.source,
            cond.kind.operator(),
            cond.value
        );
        let _ = writeln!(s, "            when: {}", q(&expr));
    }
    let inputs = dedup(&job.inputs);
    if !inputs.is_empty() {
        s.push_str("            arguments:\n              artifacts:\n");
        for id in inputs {
            let from = match local_producer(id) {
                Some(p) => format!("{{{{tasks.{p}.outputs.artifacts.{id}}}}}"),
                None => format!("{{{{workflow.artifacts.{id}}}}}"),
            };
            let _ = writeln!(s, "                - name: {}", q(id));
            let _ = writeln!(s, "                  from: {}", q(&from));
        }
    }
    s
}

fn dedup(ids: &[String]) -> Vec<&str> {
    let mut seen = BTreeSet::new();
    ids.iter().map(String::as_str).filter(|id| seen.insert(*id)).collect()
}

/// Template block(s) for one job: its container or script template and, for
/// looping steps, the recursive wrapper template.
pub(crate) fn template(graph: &WorkflowGraph, job: &JobSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "    - name: {}", q(&template_name(&job.step_name)));
    if !job.replicas.is_empty() {
        s.push_str("      metadata:\n        annotations:\n");
        for (role, n) in &job.replicas {
            let _ = writeln!(s, "          {}: {}", q(&format!("replicas/{role}")), q(&n.to_string()));
        }
    }
    for (block, ids) in [("inputs", &job.inputs), ("outputs", &job.outputs)] {
        let ids = dedup(ids);
        if ids.is_empty() {
            continue;
        }
        let _ = writeln!(s, "      {block}:\n        artifacts:");
        for id in ids {
            let _ = writeln!(s, "          - name: {}", q(id));
            let _ = writeln!(s, "            path: {}", q(&artifact_path(graph, id)));
        }
    }
    s.push_str(if job.script.is_some() { "      script:\n" } else { "      container:\n" });
    let _ = writeln!(s, "        image: {}", q(&job.image));
    for (key, list) in [("command", &job.command), ("args", &job.args)] {
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(s, "        {key}:");
        for item in list {
            let _ = writeln!(s, "          - {}", q(item));
        }
    }
    if let Some(src) = &job.script {
        let _ = writeln!(s, "        source: {}", q(src));
    }
    s.push_str("        resources:\n          requests:\n");
    let _ = writeln!(s, "            cpu: {}", q(&job.cpu_cores.to_string()));
    let _ = writeln!(s, "            memory: {}", q(&job.memory_bytes.to_string()));
    if let Some(lp) = &job.loop_spec {
        let own = loop_template_name(&job.step_name);
        let _ = writeln!(s, "    - name: {}", q(&own));
        s.push_str("      metadata:\n        annotations:\n");
        let _ = writeln!(
            s,
            "          {}: {}",
            q("workflows/max-iterations"),
            q(&lp.max_iterations.to_string())
        );
        s.push_str("      steps:\n");
        s.push_str("        - - name: \"body\"\n");
        let _ = writeln!(s, "            template: {}", q(&template_name(&job.step_name)));
        s.push_str("        - - name: \"again\"\n");
        let _ = writeln!(s, "            template: {}", q(&own));
        let expr = format!(
            "{{{{steps.body.outputs.result}}}} {} {}",
            lp.kind.operator(),
            lp.value
        );
        let _ = writeln!(s, "            when: {}", q(&expr));
    }
    s
}

pub(crate) fn render(graph: &WorkflowGraph) -> String {
    let imports: Vec<(&str, String)> = graph
        .imports()
        .keys()
        .map(|id| (id.as_str(), artifact_path(graph, id)))
        .collect();
    let mut out = header(graph.name(), &imports);
    if graph.is_empty() {
        out.push_str(EMPTY_TEMPLATES);
        return out;
    }
    let topo = Topology::new(graph);
    out.push_str(&dag_head());
    for (i, job) in graph.jobs().iter().enumerate() {
        let deps: Vec<&str> = topo.pred[i].iter().map(|&p| topo.names[p]).collect();
        out.push_str(&task(job, &deps, |id| {
            graph.artifacts().get(id).map(|m| m.producer.clone())
        }));
    }
    for job in graph.jobs() {
        out.push_str(&template(graph, job));
    }
    out
}

/// Byte budget usage of a candidate subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct Usage {
    pub size_bytes: u64,
    pub step_count: u64,
    pub pod_count: u64,
}

/// Exact running size of `render(graph.induced(members))` under a given
/// document name, updated in time proportional to the added job's degree.
pub(crate) struct SizeTracker<'g> {
    graph: &'g WorkflowGraph,
    topo: Topology<'g>,
    producer: Vec<Vec<Option<usize>>>,
    consumers: BTreeMap<usize, Vec<usize>>,
    template_len: Vec<usize>,
    header_base: usize,
    member: Vec<bool>,
    members: Vec<usize>,
    task_len: Vec<usize>,
    import_refs: BTreeMap<&'g str, usize>,
    imports_len: usize,
    body_len: usize,
    steps: u64,
    pods: u64,
}

struct Delta<'g> {
    v: usize,
    tasks: Vec<(usize, usize)>,
    added_imports: Vec<&'g str>,
    resolved_imports: Vec<&'g str>,
}

impl<'g> SizeTracker<'g> {
    pub fn new(graph: &'g WorkflowGraph, topo: Topology<'g>, name: &str) -> Self {
        let n = topo.len();
        let producer: Vec<Vec<Option<usize>>> = graph
            .jobs()
            .iter()
            .map(|j| {
                dedup(&j.inputs)
                    .into_iter()
                    .map(|id| {
                        graph
                            .artifacts()
                            .get(id)
                            .and_then(|m| topo.index.get(m.producer.as_str()).copied())
                    })
                    .collect()
            })
            .collect();
        let mut consumers: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (c, prods) in producer.iter().enumerate() {
            for p in prods.iter().flatten() {
                consumers.entry(*p).or_default().push(c);
            }
        }
        for list in consumers.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        SizeTracker {
            graph,
            producer,
            consumers,
            template_len: vec![usize::MAX; n],
            header_base: header(name, &[]).len(),
            member: vec![false; n],
            members: Vec::new(),
            task_len: vec![0; n],
            import_refs: BTreeMap::new(),
            imports_len: 0,
            body_len: 0,
            steps: 0,
            pods: 0,
            topo,
        }
    }

    fn template_len(&mut self, v: usize) -> usize {
        if self.template_len[v] == usize::MAX {
            self.template_len[v] = template(self.graph, &self.graph.jobs()[v]).len();
        }
        self.template_len[v]
    }

    fn task_len_with(&self, t: usize, extra: Option<usize>) -> usize {
        let inside = |i: usize| self.member[i] || Some(i) == extra;
        let deps: Vec<&str> = self.topo.pred[t]
            .iter()
            .filter(|&&p| inside(p))
            .map(|&p| self.topo.names[p])
            .collect();
        let job = &self.graph.jobs()[t];
        let ids = dedup(&job.inputs);
        let prods = &self.producer[t];
        task(job, &deps, |id| {
            let k = ids.iter().position(|x| *x == id)?;
            prods[k].filter(|&p| inside(p)).map(|p| self.topo.names[p].to_string())
        })
        .len()
    }

    fn import_len(&self, id: &str) -> usize {
        import_line(id, &artifact_path(self.graph, id)).len()
    }

    fn delta(&self, v: usize) -> Delta<'g> {
        let mut tasks = vec![(v, self.task_len_with(v, Some(v)))];
        let mut affected: BTreeSet<usize> = self.topo.succ[v].iter().copied().filter(|&s| self.member[s]).collect();
        if let Some(cs) = self.consumers.get(&v) {
            affected.extend(cs.iter().copied().filter(|&c| self.member[c]));
        }
        for t in affected {
            tasks.push((t, self.task_len_with(t, Some(v))));
        }
        let graph: &'g WorkflowGraph = self.graph;
        let job = &graph.jobs()[v];
        let mut added_imports = Vec::new();
        for (k, id) in dedup(&job.inputs).into_iter().enumerate() {
            let local = self.producer[v][k].is_some_and(|p| self.member[p] || p == v);
            if !local {
                added_imports.push(id);
            }
        }
        let resolved_imports = dedup(&job.outputs)
            .into_iter()
            .filter(|id| self.import_refs.contains_key(id))
            .collect();
        Delta {
            v,
            tasks,
            added_imports,
            resolved_imports,
        }
    }

    fn imports_len_after(&self, d: &Delta<'g>) -> usize {
        let mut len = self.imports_len;
        let mut fresh = BTreeSet::new();
        for id in &d.added_imports {
            if !self.import_refs.contains_key(id) && fresh.insert(*id) {
                len += self.import_len(id);
            }
        }
        for id in &d.resolved_imports {
            len -= self.import_len(id);
        }
        len
    }

    fn total(&self, steps: u64, body: usize, imports_len: usize) -> u64 {
        if steps == 0 {
            return (self.header_base + EMPTY_TEMPLATES.len()) as u64;
        }
        let args = if imports_len > 0 { "  arguments:\n    artifacts:\n".len() } else { 0 };
        (self.header_base + args + imports_len + dag_head().len() + body) as u64
    }

    pub fn usage(&self) -> Usage {
        Usage {
            size_bytes: self.total(self.steps, self.body_len, self.imports_len),
            step_count: self.steps,
            pod_count: self.pods,
        }
    }

    /// Usage after adding `v`, without committing it.
    pub fn usage_with(&mut self, v: usize) -> Usage {
        let tl = self.template_len(v);
        let d = self.delta(v);
        let body = self.body_after(&d) + tl;
        Usage {
            size_bytes: self.total(self.steps + 1, body, self.imports_len_after(&d)),
            step_count: self.steps + 1,
            pod_count: self.pods + self.graph.jobs()[v].pod_count(),
        }
    }

    fn body_after(&self, d: &Delta<'g>) -> usize {
        let mut body = self.body_len;
        for &(t, len) in &d.tasks {
            body = body - self.task_len[t] + len;
        }
        body
    }

    pub fn add(&mut self, v: usize) {
        debug_assert!(!self.member[v]);
        let tl = self.template_len(v);
        let d = self.delta(v);
        self.body_len = self.body_after(&d) + tl;
        self.imports_len = self.imports_len_after(&d);
        for &(t, len) in &d.tasks {
            self.task_len[t] = len;
        }
        for id in &d.added_imports {
            *self.import_refs.entry(id).or_insert(0) += 1;
        }
        for id in &d.resolved_imports {
            self.import_refs.remove(id);
        }
        self.member[d.v] = true;
        self.members.push(d.v);
        self.steps += 1;
        self.pods += self.graph.jobs()[v].pod_count();
    }

    /// Forget all members, keeping cached template sizes.
    pub fn reset(&mut self, name: &str) {
        self.header_base = header(name, &[]).len();
        for v in self.members.drain(..) {
            self.member[v] = false;
            self.task_len[v] = 0;
        }
        self.import_refs.clear();
        self.imports_len = 0;
        self.body_len = 0;
        self.steps = 0;
        self.pods = 0;
    }
}
