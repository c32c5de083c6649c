use super::Matrix;
use crate::error::{GeloError, Result};

/// A one-to-one pairing of rows to columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `(row, column)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

/// Minimum-cost assignment of `min(rows, cols)` pairs.
///
/// Shortest-augmenting-path Hungarian algorithm with row/column potentials,
/// `O(r²·c)`. Among equal-cost candidates the lowest column index wins during
/// each augmentation, so the output is a deterministic function of the input.
pub fn hungarian(cost: &Matrix) -> Result<Assignment> {
    let (r, c) = cost.shape();
    if r == 0 || c == 0 {
        return Err(GeloError::InvalidDimension("empty cost matrix".into()));
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(GeloError::InvalidInput("cost matrix has non-finite entries".into()));
    }
    let mut pairs = if r <= c {
        solve_wide(r, c, |i, j| cost[(i, j)])
    } else {
        solve_wide(c, r, |i, j| cost[(j, i)])
            .into_iter()
            .map(|(col, row)| (row, col))
            .collect()
    };
    pairs.sort_unstable();
    let total_cost = pairs.iter().map(|&(i, j)| cost[(i, j)]).sum();
    Ok(Assignment { pairs, total_cost })
}

fn solve_wide(n: usize, m: usize, a: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    debug_assert!(n <= m);
    // 1-based indices; column 0 and row 0 are sentinels.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    (1..=m).filter(|&j| p[j] != 0).map(|j| (p[j] - 1, j - 1)).collect()
}
