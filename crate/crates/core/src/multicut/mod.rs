//! The minimum-cost multicut problem.
//!
//! Given a graph with real edge costs, choose a decomposition of the nodes
//! into clusters minimising the summed cost of edges whose endpoints land in
//! different clusters. Every partition induces a feasible 0/1 edge labeling
//! (cut = 1) and every feasible labeling comes from a partition, so solvers
//! here work directly on node partitions.

mod brute;
mod gaec;
mod klj;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

pub use brute::{brute_force, MAX_BRUTE_FORCE_NODES};
pub use gaec::greedy_contract;
pub use klj::{klj_solve, KljStats};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEdge {
    pub u: usize,
    pub v: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticutInstance {
    nodes: usize,
    edges: Vec<CostEdge>,
}

impl MulticutInstance {
    /// Rejects self-loops, duplicate edges (in either orientation),
    /// out-of-range endpoints and non-finite costs.
    pub fn new(nodes: usize, edges: Vec<CostEdge>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.u >= nodes || e.v >= nodes {
                return Err(Error::invalid(format!("edge ({}, {}) out of range for {nodes} nodes", e.u, e.v)));
            }
            if e.u == e.v {
                return Err(Error::invalid(format!("self-edge at node {}", e.u)));
            }
            if !e.cost.is_finite() {
                return Err(Error::invalid(format!("edge ({}, {}) has non-finite cost", e.u, e.v)));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::invalid(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
        }
        Ok(MulticutInstance { nodes, edges })
    }

    pub fn from_triples(nodes: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(nodes, triples.iter().map(|&(u, v, cost)| CostEdge { u, v, cost }).collect())
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[CostEdge] {
        &self.edges
    }

    /// Neighbour lists with costs, in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for e in &self.edges {
            adj[e.u].push((e.v, e.cost));
            adj[e.v].push((e.u, e.cost));
        }
        adj
    }

    /// Text dump: node count on the first line, then `u v c` per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.nodes);
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {:?}", e.u, e.v, e.cost);
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| perr(1, "missing node count".into()))?;
        let nodes: usize = first.trim().parse().map_err(|_| perr(1, format!("bad node count '{first}'")))?;
        let mut edges = Vec::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let [u, v, c] = f[..] else {
                return Err(perr(i + 1, format!("expected 'u v c', got '{line}'")));
            };
            let u = u.parse().map_err(|_| perr(i + 1, format!("bad node '{u}'")))?;
            let v = v.parse().map_err(|_| perr(i + 1, format!("bad node '{v}'")))?;
            let cost = c.parse().map_err(|_| perr(i + 1, format!("bad cost '{c}'")))?;
            edges.push(CostEdge { u, v, cost });
        }
        Self::new(nodes, edges)
    }
}

/// Node-to-cluster labels, canonical: labels are `0..k` numbered by first
/// appearance in node order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    /// Canonicalize arbitrary labels.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Partition { labels }
    }

    pub fn singletons(n: usize) -> Self {
        Partition { labels: (0..n).collect() }
    }

    pub fn single_cluster(n: usize) -> Self {
        Partition { labels: vec![0; n] }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Member lists indexed by label.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count()];
        for (node, &l) in self.labels.iter().enumerate() {
            out[l].push(node);
        }
        out
    }
}

/// Cut indicator per edge, in instance edge order: `true` = cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeLabeling {
    pub cut: Vec<bool>,
}

fn check_cover(instance: &MulticutInstance, partition: &Partition) -> Result<()> {
    if partition.len() < instance.node_count() {
        return Err(Error::UnlabeledNode(partition.len()));
    }
    if partition.len() > instance.node_count() {
        return Err(Error::invalid(format!(
            "partition labels {} nodes, instance has {}",
            partition.len(),
            instance.node_count()
        )));
    }
    Ok(())
}

pub fn induced_labeling(instance: &MulticutInstance, partition: &Partition) -> Result<EdgeLabeling> {
    check_cover(instance, partition)?;
    let l = partition.labels();
    Ok(EdgeLabeling {
        cut: instance.edges().iter().map(|e| l[e.u] != l[e.v]).collect(),
    })
}

/// Union-find with path halving.
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Whether the labeling satisfies every cycle inequality, i.e. no cut edge
/// joins two nodes already connected through uncut edges.
pub fn is_feasible(instance: &MulticutInstance, labeling: &EdgeLabeling) -> bool {
    if labeling.cut.len() != instance.edges().len() {
        return false;
    }
    let mut sets = DisjointSets::new(instance.node_count());
    for (e, &cut) in instance.edges().iter().zip(&labeling.cut) {
        if !cut {
            sets.union(e.u, e.v);
        }
    }
    instance
        .edges()
        .iter()
        .zip(&labeling.cut)
        .all(|(e, &cut)| !cut || sets.find(e.u) != sets.find(e.v))
}

/// Summed cost of edges between different clusters.
pub fn objective(instance: &MulticutInstance, partition: &Partition) -> Result<f64> {
    check_cover(instance, partition)?;
    Ok(objective_of(instance, partition.labels()))
}

pub(crate) fn objective_of(instance: &MulticutInstance, labels: &[usize]) -> f64 {
    instance
        .edges()
        .iter()
        .filter(|e| labels[e.u] != labels[e.v])
        .map(|e| e.cost)
        .sum()
}
