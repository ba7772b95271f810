//! Dinic max-flow on a graph with real capacities.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: f64,
}

#[derive(Debug, Clone)]
pub struct FlowGraph {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    eps: f64,
}

impl FlowGraph {
    pub fn new(nodes: usize) -> Self {
        FlowGraph {
            adj: vec![Vec::new(); nodes],
            edges: Vec::new(),
            eps: 1e-12,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Residual capacities at or below this value count as saturated.
    pub fn set_epsilon(&mut self, eps: f64) {
        self.eps = eps;
    }

    /// Directed edge u→v with capacity `cap` (reverse capacity `rev_cap`).
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, rev_cap: f64) {
        self.adj[u].push(self.edges.len());
        self.edges.push(Edge { to: v, cap });
        self.adj[v].push(self.edges.len());
        self.edges.push(Edge { to: u, cap: rev_cap });
    }

    fn levels(&self, s: usize) -> Vec<i32> {
        let mut level = vec![-1; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let edge = &self.edges[e];
                if edge.cap > self.eps && level[edge.to] < 0 {
                    level[edge.to] = level[u] + 1;
                    queue.push_back(edge.to);
                }
            }
        }
        level
    }

    fn augment(&mut self, s: usize, t: usize, level: &[i32], next: &mut [usize]) -> f64 {
        // Iterative DFS along the level graph, pushing the bottleneck of each path.
        let mut total = 0.0;
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let bottleneck = path.iter().map(|&e| self.edges[e].cap).fold(f64::INFINITY, f64::min);
                for &e in &path {
                    self.edges[e].cap -= bottleneck;
                    self.edges[e ^ 1].cap += bottleneck;
                }
                total += bottleneck;
                path.clear();
                u = s;
                continue;
            }
            let mut advanced = false;
            while next[u] < self.adj[u].len() {
                let e = self.adj[u][next[u]];
                let edge = &self.edges[e];
                if edge.cap > self.eps && level[edge.to] == level[u] + 1 {
                    path.push(e);
                    u = edge.to;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if !advanced {
                if u == s {
                    return total;
                }
                // Dead end: retreat and skip the edge that led here.
                let e = path.pop().expect("non-source node has an incoming path edge");
                u = self.edges[e ^ 1].to;
                next[u] += 1;
            }
        }
    }

    /// Maximum s–t flow; the graph keeps its residual capacities.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] < 0 {
                return flow;
            }
            let mut next = vec![0; self.adj.len()];
            flow += self.augment(s, t, &level, &mut next);
        }
    }

    /// Nodes reachable from `s` in the residual graph (the minimal source side).
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        self.levels(s).iter().map(|&l| l >= 0).collect()
    }
}
