//! Energy distance `2E||X-Y|| - E||X-X'|| - E||Y-Y'||`.

use rand::Rng;
use rayon::prelude::*;

use super::{check_dims, sq_dist, SampleCloud};
use crate::error::{param, Result};
use crate::rng::replicate_rng;

/// Mean of `||a_{ia(i)} - b_{ib(j)}||` over index pairs; `skip_diagonal` drops
/// `i == j` (same position, used for within-sample U-statistics). The dropped
/// terms are distances of a point to itself, so only the pair count changes.
/// Row sums are computed in parallel and added in index order, so the result
/// does not depend on the thread count.
fn mean_distance(a: &SampleCloud, ia: &[usize], b: &SampleCloud, ib: &[usize], skip_diagonal: bool) -> f64 {
    let total = if a.dim() == 1 {
        abs_diff_sum_1d(a, ia, b, ib)
    } else {
        let rows: Vec<f64> = ia
            .par_iter()
            .map(|&pa| {
                let x = a.point(pa);
                ib.iter().map(|&pb| sq_dist(x, b.point(pb)).sqrt()).sum::<f64>()
            })
            .collect();
        rows.iter().sum::<f64>()
    };
    let pairs = if skip_diagonal {
        ia.len() * (ia.len() - 1)
    } else {
        ia.len() * ib.len()
    };
    total / pairs as f64
}

/// `Σ_i Σ_j |a_i - b_j|` in `O(m log m)`: with `b` sorted and prefix sums `P`,
/// a point `x` with `k` values of `b` below it contributes
/// `k x - P_k + (P_m - P_k) - (m - k) x`.
fn abs_diff_sum_1d(a: &SampleCloud, ia: &[usize], b: &SampleCloud, ib: &[usize]) -> f64 {
    let mut ys: Vec<f64> = ib.iter().map(|&j| b.points[[j, 0]]).collect();
    ys.sort_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(ys.len() + 1);
    prefix.push(0.0);
    for y in &ys {
        prefix.push(prefix.last().unwrap() + y);
    }
    let m = ys.len();
    let all = prefix[m];
    ia.iter()
        .map(|&i| {
            let x = a.points[[i, 0]];
            let k = ys.partition_point(|&y| y < x);
            let kf = k as f64;
            (kf * x - prefix[k]) + (all - prefix[k] - (m - k) as f64 * x)
        })
        .sum()
}

fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn u_statistic(a: &SampleCloud, ia: &[usize], b: &SampleCloud, ib: &[usize]) -> f64 {
    2.0 * mean_distance(a, ia, b, ib, false) - mean_distance(a, ia, a, ia, true) - mean_distance(b, ib, b, ib, true)
}

fn check(a: &SampleCloud, b: &SampleCloud) -> Result<()> {
    check_dims(a, b)?;
    if a.len() < 2 || b.len() < 2 {
        return Err(param("m", "energy distance needs at least two points per cloud"));
    }
    Ok(())
}

/// Unbiased U-statistic: within-cloud means exclude self-pairs. Its expectation
/// is zero iff the laws coincide; a single realization can be negative.
pub fn energy_distance(a: &SampleCloud, b: &SampleCloud) -> Result<f64> {
    check(a, b)?;
    Ok(u_statistic(a, &identity(a.len()), b, &identity(b.len())))
}

/// V-statistic (all pairs, self-pairs included): the energy distance between
/// the two empirical measures. Nonnegative, and exactly zero for identical clouds.
pub fn energy_distance_v(a: &SampleCloud, b: &SampleCloud) -> Result<f64> {
    check(a, b)?;
    let (ia, ib) = (identity(a.len()), identity(b.len()));
    Ok(2.0 * mean_distance(a, &ia, b, &ib, false)
        - mean_distance(a, &ia, a, &ia, false)
        - mean_distance(b, &ib, b, &ib, false))
}

/// Standard error of [`energy_distance`] from `replicates` two-sample bootstrap
/// resamples, each drawn from its own stream of `seed`.
pub fn energy_distance_bootstrap_se(a: &SampleCloud, b: &SampleCloud, replicates: usize, seed: u64) -> Result<f64> {
    check(a, b)?;
    if replicates < 2 {
        return Err(param("replicates", "bootstrap needs at least two resamples"));
    }
    let values: Vec<f64> = (0..replicates)
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let ia: Vec<usize> = (0..a.len()).map(|_| rng.random_range(0..a.len())).collect();
            let ib: Vec<usize> = (0..b.len()).map(|_| rng.random_range(0..b.len())).collect();
            u_statistic(a, &ia, b, &ib)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / replicates as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    use crate::rng::seeded;
    use crate::Scalar;

    fn gaussian(seed: u64, m: usize, dim: usize) -> SampleCloud {
        let mut rng = seeded(seed);
        SampleCloud::new(Array2::from_shape_fn((m, dim), |_| f64::standard_normal(&mut rng)), "g").unwrap()
    }

    #[test]
    fn one_dimensional_path_matches_pairwise_sum() {
        let a = gaussian(2, 40, 1);
        let b = gaussian(3, 35, 1);
        let ia: Vec<usize> = (0..40).map(|i| (i * 7) % 40).collect();
        let ib: Vec<usize> = (0..35).collect();
        let brute: f64 = ia
            .iter()
            .flat_map(|&i| ib.iter().map(move |&j| (i, j)))
            .map(|(i, j)| (a.points[[i, 0]] - b.points[[j, 0]]).abs())
            .sum();
        assert!((abs_diff_sum_1d(&a, &ia, &b, &ib) - brute).abs() < 1e-10 * brute);
    }

    #[test]
    fn point_masses() {
        let a = SampleCloud::new(Array2::from_elem((5, 2), 0.0), "a").unwrap();
        let b = SampleCloud::new(Array2::from_shape_fn((6, 2), |(_, j)| [3.0, 4.0][j]), "b").unwrap();
        assert_eq!(energy_distance(&a, &b).unwrap(), 10.0);
        assert_eq!(energy_distance_v(&a, &b).unwrap(), 10.0);
    }

    #[test]
    fn identical_clouds() {
        let a = gaussian(1, 50, 3);
        assert_eq!(energy_distance_v(&a, &a).unwrap(), 0.0);
        // the U-statistic is -(2/m) times the within-cloud mean here
        let u = energy_distance(&a, &a).unwrap();
        let ia: Vec<usize> = (0..50).collect();
        let within = mean_distance(&a, &ia, &a, &ia, true);
        assert!((u + 2.0 / 50.0 * within).abs() < 1e-12);
    }

    #[test]
    fn same_law_is_within_noise() {
        let a = gaussian(5, 2000, 1);
        let b = gaussian(6, 2000, 1);
        let e = energy_distance(&a, &b).unwrap();
        let se = energy_distance_bootstrap_se(&a, &b, 30, 9).unwrap();
        assert!(e.abs() < 4.0 * se, "{e} vs se {se}");
    }

    #[test]
    fn shifted_law_is_detected() {
        let a = gaussian(5, 500, 2);
        let mut b = gaussian(6, 500, 2);
        b.points.mapv_inplace(|v| v + 1.0);
        let e = energy_distance(&a, &b).unwrap();
        let se = energy_distance_bootstrap_se(&a, &b, 20, 9).unwrap();
        assert!(e > 4.0 * se);
    }
}
