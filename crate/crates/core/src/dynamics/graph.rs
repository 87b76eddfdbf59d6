//! Collision graphs, cycle detection and clustering trees.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use super::flow::EventLog;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub time: f64,
}

impl Edge {
    pub fn new(i: usize, j: usize, time: f64) -> Self {
        Edge {
            i: i.min(j),
            j: i.max(j),
            time,
        }
    }
}

/// Multigraph on `0..n` with time-ordered edges.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CollisionGraph {
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl CollisionGraph {
    pub fn new(n: usize, mut edges: Vec<Edge>) -> Self {
        edges.sort_by(|a, b| a.time.total_cmp(&b.time));
        CollisionGraph { n, edges }
    }

    /// Index of the first edge that closes a cycle when edges are inserted
    /// in time order. A repeated pair counts.
    pub fn first_cycle_event(&self) -> Option<usize> {
        let mut uf = UnionFind::<usize>::new(self.n);
        self.edges.iter().position(|e| !uf.union(e.i, e.j))
    }

    pub fn is_forest(&self) -> bool {
        self.first_cycle_event().is_none()
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::<usize>::new(self.n);
        let merges = self.edges.iter().filter(|e| uf.union(e.i, e.j)).count();
        self.n - merges
    }

    /// Edges that join already connected vertices when inserted in time order.
    pub fn cycle_edge_count(&self) -> usize {
        self.edges.len() + self.component_count() - self.n
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// Vertices touched by at least one edge.
    pub fn touched(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        for e in &self.edges {
            seen[e.i] = true;
            seen[e.j] = true;
        }
        (0..self.n).filter(|&k| seen[k]).collect()
    }
}

/// Graph of the events of `log` with `start <= time <= end`, on `n` vertices.
pub fn collision_graph(log: &EventLog, n: usize, start: f64, end: f64) -> CollisionGraph {
    let edges = log
        .events
        .iter()
        .filter(|e| e.time >= start && e.time <= end)
        .map(|e| Edge::new(e.i, e.j, e.time))
        .collect();
    CollisionGraph::new(n, edges)
}

/// `first_cycle_event` as a free function.
pub fn first_cycle_event(graph: &CollisionGraph) -> Option<usize> {
    graph.first_cycle_event()
}

/// Merges the graphs, scans edges in time order and keeps those joining two
/// distinct components.
pub fn clustering_tree(graphs: &[&CollisionGraph]) -> Vec<Edge> {
    let n = graphs.iter().map(|g| g.n).max().unwrap_or(0);
    let mut edges: Vec<Edge> = graphs
        .iter()
        .flat_map(|g| g.edges.iter().copied())
        .collect();
    edges.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut uf = UnionFind::<usize>::new(n);
    edges.into_iter().filter(|e| uf.union(e.i, e.j)).collect()
}
