//! Exact linear assignment by shortest augmenting paths (Hungarian method with
//! potentials), O(m^3).

use rayon::prelude::*;

use super::{check_dims, sq_dist, SampleCloud};
use crate::error::{param, Error, Result};

pub const MAX_ASSIGNMENT_POINTS: usize = 1024;

/// Minimum-cost perfect matching on a square cost matrix given row-major.
/// Returns `(total cost, assignment)` with row `i` matched to column `assignment[i]`.
pub fn solve_assignment(cost: &[f64], m: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), m * m);
    if m == 0 {
        return (0.0, Vec::new());
    }
    // 1-based arrays; column 0 is the virtual source
    let inf = f64::INFINITY;
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![inf; m + 1];
    let mut used = vec![false; m + 1];

    for row in 1..=m {
        owner[0] = row;
        let mut col0 = 0;
        minv.fill(inf);
        used.fill(false);
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = inf;
            let mut col1 = 0;
            let base = (i0 - 1) * m;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[base + j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = col0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        col1 = j;
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
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0; m];
    for j in 1..=m {
        assignment[owner[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[i * m + j]).sum();
    (total, assignment)
}

/// W2 distance between two equal-size empirical measures:
/// `sqrt(min_σ (1/m) Σ ||a_i - b_σ(i)||²)`.
pub fn empirical_wasserstein2(a: &SampleCloud, b: &SampleCloud) -> Result<f64> {
    check_dims(a, b)?;
    let m = a.len();
    if m != b.len() {
        return Err(Error::Dimension(format!("cloud sizes {} and {}", m, b.len())));
    }
    if m > MAX_ASSIGNMENT_POINTS {
        return Err(param(
            "m",
            format!("{m} points exceed the assignment limit {MAX_ASSIGNMENT_POINTS}; use the energy distance"),
        ));
    }
    let mut cost = vec![0.0; m * m];
    cost.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        for (j, c) in row.iter_mut().enumerate() {
            *c = sq_dist(a.point(i), b.point(j));
        }
    });
    let (total, _) = solve_assignment(&cost, m);
    Ok((total.max(0.0) / m as f64).sqrt())
}
