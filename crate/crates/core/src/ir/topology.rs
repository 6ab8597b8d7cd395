use std::collections::{HashMap, VecDeque};

use super::WorkflowGraph;

/// Index-based adjacency over a graph's jobs. Indices follow step-name order,
/// so successor and predecessor lists come out sorted by name.
#[derive(Debug, Clone)]
pub(crate) struct Topology<'g> {
    pub names: Vec<&'g str>,
    pub index: HashMap<&'g str, usize>,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl<'g> Topology<'g> {
    /// Edges with an unknown endpoint are ignored; callers validate first.
    pub fn new(graph: &'g WorkflowGraph) -> Self {
        let names: Vec<&str> = graph.jobs().iter().map(|j| j.step_name.as_str()).collect();
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut succ = vec![Vec::new(); names.len()];
        let mut pred = vec![Vec::new(); names.len()];
        for e in graph.edges() {
            if let (Some(&a), Some(&b)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) {
                succ[a].push(b);
                pred[b].push(a);
            }
        }
        for list in succ.iter_mut().chain(pred.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Topology {
            names,
            index,
            succ,
            pred,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// Kahn's algorithm, smallest index first. `None` if a cycle exists.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = self.pred.iter().map(Vec::len).collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = indeg
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| std::cmp::Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(std::cmp::Reverse(v)) = ready.pop() {
            order.push(v);
            for &s in &self.succ[v] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.push(std::cmp::Reverse(s));
                }
            }
        }
        (order.len() == self.len()).then_some(order)
    }

    /// Breadth-first layers from `start` along `next`, at most `max_layers`
    /// hops. `expand` decides whether a reached node (other than the start)
    /// is itself expanded. Returns (node, hop distance) in visit order.
    pub fn layered_bfs(
        &self,
        start: usize,
        max_layers: usize,
        forward: bool,
        mut expand: impl FnMut(usize) -> bool,
    ) -> Vec<(usize, usize)> {
        let adj = if forward { &self.succ } else { &self.pred };
        let mut dist = vec![usize::MAX; self.len()];
        dist[start] = 0;
        let mut out = vec![(start, 0)];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v];
            if d >= max_layers || (v != start && !expand(v)) {
                continue;
            }
            for &n in &adj[v] {
                if dist[n] == usize::MAX {
                    dist[n] = d + 1;
                    out.push((n, d + 1));
                    queue.push_back(n);
                }
            }
        }
        out
    }
}
