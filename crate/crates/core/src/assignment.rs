//! Minimum-cost bipartite assignment (Hungarian method with potentials).

/// Solve the rectangular assignment problem for a row-major `rows x cols`
/// cost matrix. Returns, for each row, the column it is assigned to; when
/// there are more rows than columns, some rows stay unassigned.
pub fn linear_sum_assignment(costs: &[f64], rows: usize, cols: usize) -> Vec<Option<usize>> {
    assert_eq!(costs.len(), rows * cols, "cost matrix has the wrong size");
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows > cols {
        let mut t = vec![0.0; costs.len()];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = costs[r * cols + c];
            }
        }
        let by_col = linear_sum_assignment(&t, cols, rows);
        let mut out = vec![None; rows];
        for (c, r) in by_col.into_iter().enumerate() {
            if let Some(r) = r {
                out[r] = Some(c);
            }
        }
        return out;
    }

    // Shortest augmenting paths, 1-based with column 0 as a sentinel.
    let (n, m) = (rows, cols);
    let cost = |i: usize, j: usize| costs[(i - 1) * m + (j - 1)];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; n];
    for j in 1..=m {
        if owner[j] != 0 {
            out[owner[j] - 1] = Some(j - 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(costs: &[f64], cols: usize, a: &[Option<usize>]) -> f64 {
        a.iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| costs[r * cols + c]))
            .sum()
    }

    fn brute(costs: &[f64], rows: usize, cols: usize) -> f64 {
        fn rec(r: usize, rows: usize, cols: usize, used: &mut Vec<bool>, costs: &[f64]) -> f64 {
            if r == rows {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for c in 0..cols {
                if !used[c] {
                    used[c] = true;
                    best = best.min(costs[r * cols + c] + rec(r + 1, rows, cols, used, costs));
                    used[c] = false;
                }
            }
            best
        }
        rec(0, rows, cols, &mut vec![false; cols], costs)
    }

    #[test]
    fn small_square() {
        let costs = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = linear_sum_assignment(&costs, 3, 3);
        assert_eq!(total(&costs, 3, &a), 5.0);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(linear_sum_assignment(&[], 2, 0), vec![None, None]);
        assert!(linear_sum_assignment(&[], 0, 3).is_empty());
    }

    proptest! {
        #[test]
        fn optimal_on_small_matrices(rows in 1usize..5, cols in 1usize..5, seed in proptest::collection::vec(0.0..10.0f64, 16)) {
            let costs: Vec<f64> = seed[..rows * cols].to_vec();
            let a = linear_sum_assignment(&costs, rows, cols);
            let assigned = a.iter().flatten().count();
            prop_assert_eq!(assigned, rows.min(cols));
            let mut seen = std::collections::HashSet::new();
            prop_assert!(a.iter().flatten().all(|c| seen.insert(*c)));
            let best = if rows <= cols {
                brute(&costs, rows, cols)
            } else {
                let mut t = vec![0.0; rows * cols];
                for r in 0..rows { for c in 0..cols { t[c * rows + r] = costs[r * cols + c]; } }
                brute(&t, cols, rows)
            };
            prop_assert!((total(&costs, cols, &a) - best).abs() < 1e-9);
        }
    }
}
