use super::{objective_of, MulticutInstance, Partition};
use crate::error::{Error, Result};

pub const MAX_BRUTE_FORCE_NODES: usize = 12;

/// Exact minimum by enumerating every set partition as a restricted growth
/// string. Strings are visited in lexicographic order and only a strictly
/// better objective replaces the incumbent, so ties resolve to the
/// lexicographically smallest canonical labeling.
pub fn brute_force(instance: &MulticutInstance) -> Result<Partition> {
    let n = instance.node_count();
    if n > MAX_BRUTE_FORCE_NODES {
        return Err(Error::TooLarge {
            nodes: n,
            max: MAX_BRUTE_FORCE_NODES,
        });
    }
    if n == 0 {
        return Ok(Partition::from_labels(&[]));
    }
    let mut labels = vec![0usize; n];
    // prefix_max[i] = max(labels[0..i])
    let mut prefix_max = vec![0usize; n];
    let mut best = labels.clone();
    let mut best_obj = objective_of(instance, &labels);
    loop {
        // Advance to the next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(Partition::from_labels(&best));
            }
            if labels[i] <= prefix_max[i] {
                labels[i] += 1;
                break;
            }
            i -= 1;
        }
        for j in i + 1..n {
            labels[j] = 0;
            prefix_max[j] = prefix_max[j - 1].max(labels[j - 1]);
        }
        let obj = objective_of(instance, &labels);
        if obj < best_obj - 1e-12 {
            best_obj = obj;
            best.copy_from_slice(&labels);
        }
    }
}
