//! Kernighan-Lin local search with joins.
//!
//! A pass visits every pair of clusters connected by at least one edge, and
//! every cluster paired with a fresh empty cluster. For each such
//! bipartition, nodes are moved one at a time to the other side, always
//! taking the move with the largest gain even when it is negative, with each
//! node moving at most once. The best prefix of that move sequence is
//! committed if it lowers the objective; merging the two clusters outright
//! is considered as an alternative move. Passes repeat until one brings no
//! improvement.
//!
//! The gain of moving a node between two clusters only depends on edges
//! inside their union, so after the first pass a bipartition is revisited
//! only if one of its clusters changed since it was last examined.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{objective_of, MulticutInstance, Partition};
use crate::error::{Error, Result};

/// Improvements at or below this are treated as zero.
const GAIN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KljStats {
    /// Passes run, including the final one that found nothing.
    pub passes: usize,
    /// Objective before the first pass and after each pass.
    pub objective_history: Vec<f64>,
}

impl KljStats {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, PartialEq)]
struct Move {
    gain: f64,
    node: usize,
}

impl Eq for Move {}

impl Ord for Move {
    // Largest gain first, smallest node id on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Move {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search<'a> {
    adj: &'a [Vec<(usize, f64)>],
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
    gain: Vec<f64>,
    moved: Vec<bool>,
}

enum Outcome {
    Unchanged,
    Join,
    Moves(usize),
}

impl Search<'_> {
    /// Run one Kernighan-Lin sequence between clusters `a` and `b`; `b` may
    /// be an unused label, in which case only splits are possible. Commits
    /// the best improvement found and returns its gain.
    fn improve(&mut self, a: usize, b: usize) -> f64 {
        let nodes: Vec<usize> = self.members[a].iter().chain(&self.members[b]).copied().collect();
        if nodes.len() < 2 {
            return 0.0;
        }
        let mut heap = BinaryHeap::with_capacity(nodes.len());
        let mut join_gain = 0.0;
        for &v in &nodes {
            let own = self.labels[v];
            let other = if own == a { b } else { a };
            let mut g = 0.0;
            for &(u, c) in &self.adj[v] {
                let lu = self.labels[u];
                if lu == other {
                    g += c;
                    if own == a {
                        join_gain += c;
                    }
                } else if lu == own {
                    g -= c;
                }
            }
            self.gain[v] = g;
            heap.push(Move { gain: g, node: v });
        }

        let mut sequence = Vec::with_capacity(nodes.len());
        let (mut cumulative, mut best, mut best_len) = (0.0, 0.0, 0);
        while let Some(m) = heap.pop() {
            let v = m.node;
            if self.moved[v] || self.gain[v] != m.gain {
                continue;
            }
            self.moved[v] = true;
            sequence.push(v);
            cumulative += m.gain;
            if cumulative > best {
                best = cumulative;
                best_len = sequence.len();
            }
            let to = if self.labels[v] == a { b } else { a };
            self.labels[v] = to;
            for &(u, c) in &self.adj[v] {
                let lu = self.labels[u];
                if self.moved[u] || (lu != a && lu != b) {
                    continue;
                }
                // v now sits on u's side if lu == to.
                self.gain[u] += if lu == to { -2.0 * c } else { 2.0 * c };
                heap.push(Move { gain: self.gain[u], node: u });
            }
        }

        // Undo the tentative sequence.
        for &v in sequence.iter().rev() {
            let back = if self.labels[v] == a { b } else { a };
            self.labels[v] = back;
            self.moved[v] = false;
        }

        let outcome = if join_gain > best && join_gain > GAIN_EPS && !self.members[b].is_empty() {
            Outcome::Join
        } else if best > GAIN_EPS {
            Outcome::Moves(best_len)
        } else {
            Outcome::Unchanged
        };
        match outcome {
            Outcome::Unchanged => 0.0,
            Outcome::Join => {
                let absorbed = std::mem::take(&mut self.members[b]);
                for &v in &absorbed {
                    self.labels[v] = a;
                }
                self.members[a].extend(absorbed);
                join_gain
            }
            Outcome::Moves(k) => {
                for &v in &sequence[..k] {
                    self.labels[v] = if self.labels[v] == a { b } else { a };
                }
                let (mut in_a, mut in_b) = (Vec::new(), Vec::new());
                for &v in &nodes {
                    if self.labels[v] == a {
                        in_a.push(v);
                    } else {
                        in_b.push(v);
                    }
                }
                in_a.sort_unstable();
                in_b.sort_unstable();
                self.members[a] = in_a;
                self.members[b] = in_b;
                best
            }
        }
    }
}

/// Improve `init` by Kernighan-Lin passes until a pass finds no improvement
/// or `max_passes` passes have run.
pub fn klj_solve(
    instance: &MulticutInstance,
    init: &Partition,
    max_passes: usize,
) -> Result<(Partition, KljStats)> {
    if max_passes < 1 {
        return Err(Error::invalid("max_passes must be at least 1"));
    }
    let n = instance.node_count();
    if init.len() != n {
        return Err(if init.len() < n {
            Error::UnlabeledNode(init.len())
        } else {
            Error::invalid(format!("partition labels {} nodes, instance has {n}", init.len()))
        });
    }
    let adj = instance.adjacency();
    let mut search = Search {
        adj: &adj,
        labels: init.labels().to_vec(),
        members: init.clusters(),
        gain: vec![0.0; n],
        moved: vec![false; n],
    };
    let mut history = vec![objective_of(instance, &search.labels)];
    let mut dirty = vec![true; search.members.len()];
    let mut passes = 0;

    while passes < max_passes {
        passes += 1;
        let mut touched = vec![false; search.members.len()];
        let mut improved = 0.0;

        let mut pairs: Vec<(usize, usize)> = instance
            .edges()
            .iter()
            .filter_map(|e| {
                let (la, lb) = (search.labels[e.u], search.labels[e.v]);
                (la != lb).then(|| (la.min(lb), la.max(lb)))
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();

        for (a, b) in pairs {
            if search.members[a].is_empty() || search.members[b].is_empty() {
                continue;
            }
            if !(dirty[a] || dirty[b] || touched[a] || touched[b]) {
                continue;
            }
            let g = search.improve(a, b);
            if g > 0.0 {
                improved += g;
                touched[a] = true;
                touched[b] = true;
            }
        }

        let clusters = search.members.len();
        for a in 0..clusters {
            if search.members[a].len() < 2 || !(dirty[a] || touched[a]) {
                continue;
            }
            let fresh = search.members.len();
            search.members.push(Vec::new());
            let g = search.improve(a, fresh);
            if g > 0.0 {
                improved += g;
                touched[a] = true;
                touched.push(true);
                dirty.push(true);
            } else {
                search.members.pop();
            }
        }

        let obj = objective_of(instance, &search.labels);
        log::debug!("klj pass {passes}: objective {obj:.6} (gain {improved:.6})");
        history.push(obj);
        if improved <= 0.0 {
            break;
        }
        dirty = touched;
    }

    Ok((
        Partition::from_labels(&search.labels),
        KljStats {
            passes,
            objective_history: history,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multicut::{brute_force, greedy_contract, objective};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, density: f64) -> MulticutInstance {
        let mut triples = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(density) {
                    triples.push((u, v, rng.random_range(-1.0..1.0)));
                }
            }
        }
        MulticutInstance::from_triples(n, &triples).unwrap()
    }

    #[test]
    fn rejects_zero_passes() {
        let inst = MulticutInstance::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        assert!(klj_solve(&inst, &Partition::singletons(2), 0).is_err());
        assert!(klj_solve(&inst, &Partition::singletons(1), 3).is_err());
    }

    #[test]
    fn joins_two_attracting_nodes() {
        let inst = MulticutInstance::from_triples(2, &[(0, 1, 2.0)]).unwrap();
        let (p, stats) = klj_solve(&inst, &Partition::singletons(2), 10).unwrap();
        assert_eq!(p, Partition::single_cluster(2));
        assert_eq!(objective(&inst, &p).unwrap(), 0.0);
        assert_eq!(stats.objective_history.first(), Some(&2.0));
    }

    #[test]
    fn splits_a_repelling_cluster() {
        let inst = MulticutInstance::from_triples(4, &[(0, 1, 1.0), (2, 3, 1.0), (1, 2, -5.0), (0, 3, -0.5)]).unwrap();
        let (p, _) = klj_solve(&inst, &Partition::single_cluster(4), 10).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 1]);
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let n = rng.random_range(2..=8);
            let inst = random_instance(&mut rng, n, 0.8);
            let opt = brute_force(&inst).unwrap();
            let (p, stats) = klj_solve(&inst, &opt, 10).unwrap();
            assert_eq!(p, opt);
            assert_eq!(stats.passes, 1);
        }
    }

    #[test]
    fn never_worse_than_init_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = rng.random_range(5..40);
            let inst = random_instance(&mut rng, n, 0.3);
            let raw: Vec<usize> = (0..n).map(|_| rng.random_range(0..5)).collect();
            let init = Partition::from_labels(&raw);
            let (p, stats) = klj_solve(&inst, &init, 50).unwrap();
            let before = objective(&inst, &init).unwrap();
            let after = objective(&inst, &p).unwrap();
            assert!(after <= before + 1e-9);
            assert!(stats.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
            assert!((stats.objective() - after).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let inst = random_instance(&mut rng, 60, 0.2);
        let init = greedy_contract(&inst);
        let a = klj_solve(&inst, &init, 100).unwrap();
        let b = klj_solve(&inst, &init, 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mostly_optimal_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut hits = 0;
        for _ in 0..100 {
            let n = rng.random_range(2..=8);
            let inst = random_instance(&mut rng, n, 0.7);
            let opt = objective(&inst, &brute_force(&inst).unwrap()).unwrap();
            let (p, _) = klj_solve(&inst, &greedy_contract(&inst), 100).unwrap();
            let got = objective(&inst, &p).unwrap();
            assert!(got >= opt - 1e-9);
            hits += usize::from(got <= opt + 1e-9);
        }
        assert!(hits >= 95, "{hits}/100 optimal");
    }
}
