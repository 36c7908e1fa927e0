use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::{MulticutInstance, Partition};

#[derive(Debug, PartialEq)]
struct Candidate {
    weight: f64,
    a: usize,
    b: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Max-heap on weight, then smallest (a, b).
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy additive edge contraction.
///
/// Clusters start as singletons. While some pair of adjacent clusters has a
/// positive summed connecting cost, the pair with the largest sum is merged
/// (ties go to the smallest label pair). The surviving cluster keeps the
/// smaller label; parallel edges are added together.
pub fn greedy_contract(instance: &MulticutInstance) -> Partition {
    let n = instance.node_count();
    let mut adj: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n];
    for e in instance.edges() {
        *adj[e.u].entry(e.v).or_insert(0.0) += e.cost;
        *adj[e.v].entry(e.u).or_insert(0.0) += e.cost;
    }
    let mut alive = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();

    let mut heap = BinaryHeap::new();
    for (a, nbrs) in adj.iter().enumerate() {
        for (&b, &w) in nbrs {
            if a < b && w > 0.0 {
                heap.push(Candidate { weight: w, a, b });
            }
        }
    }

    while let Some(c) = heap.pop() {
        // Stale entries either reference a merged-away cluster or carry an
        // outdated weight.
        if !(alive[c.a] && alive[c.b]) || adj[c.a].get(&c.b) != Some(&c.weight) {
            continue;
        }
        let (keep, gone) = (c.a, c.b);
        alive[gone] = false;
        parent[gone] = keep;
        let mut absorbed = std::mem::take(&mut adj[gone]);
        absorbed.remove(&keep);
        adj[keep].remove(&gone);
        // Merge the smaller map into the larger one.
        if absorbed.len() > adj[keep].len() {
            std::mem::swap(&mut absorbed, &mut adj[keep]);
        }
        for (other, w) in absorbed {
            *adj[keep].entry(other).or_insert(0.0) += w;
        }
        let merged: Vec<(usize, f64)> = adj[keep].iter().map(|(&o, &w)| (o, w)).collect();
        for (other, w) in merged {
            adj[other].remove(&gone);
            adj[other].insert(keep, w);
            if w > 0.0 {
                heap.push(Candidate { weight: w, a: keep.min(other), b: keep.max(other) });
            }
        }
    }

    let mut labels = vec![0usize; n];
    for (v, l) in labels.iter_mut().enumerate() {
        let mut r = v;
        while parent[r] != r {
            r = parent[r];
        }
        *l = r;
    }
    Partition::from_labels(&labels)
}
