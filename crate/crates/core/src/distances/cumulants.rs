//! Unbiased cumulant estimates (k-statistics) with jackknife standard errors.

use rayon::prelude::*;
use serde::Serialize;

use super::SampleCloud;
use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct KStatistics {
    pub mean: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoordinateCumulants {
    pub estimate: KStatistics,
    /// Jackknife standard errors of each field of `estimate`.
    pub stderr: KStatistics,
}

/// k-statistics from power sums `s_p = Σ z^p` of `n` values.
fn from_power_sums(n: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> KStatistics {
    let k2 = (n * s2 - s1 * s1) / (n * (n - 1.0));
    let k3 = (n * n * s3 - 3.0 * n * s2 * s1 + 2.0 * s1.powi(3)) / (n * (n - 1.0) * (n - 2.0));
    let k4 = ((n * n * n + n * n) * s4 - 4.0 * (n * n + n) * s3 * s1 - 3.0 * (n * n - n) * s2 * s2
        + 12.0 * n * s2 * s1 * s1
        - 6.0 * s1.powi(4))
        / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
    KStatistics {
        mean: s1 / n,
        k2,
        k3,
        k4,
    }
}

/// Centers the data before forming power sums: first by `x[0]` (exact for
/// constant data), then by the mean of the shifted values.
fn centered(x: &[f64]) -> (f64, Vec<f64>) {
    let x0 = x[0];
    let shifted: Vec<f64> = x.iter().map(|v| v - x0).collect();
    let m = shifted.iter().sum::<f64>() / x.len() as f64;
    (x0 + m, shifted.into_iter().map(|v| v - m).collect())
}

fn power_sums(z: &[f64]) -> [f64; 4] {
    z.iter().fold([0.0; 4], |[a, b, c, d], &v| {
        let v2 = v * v;
        [a + v, b + v2, c + v2 * v, d + v2 * v2]
    })
}

pub fn k_statistics(x: &[f64]) -> Result<KStatistics> {
    if x.len() < 4 {
        return Err(param("m", "k-statistics up to order 4 need at least 4 values"));
    }
    let (center, z) = centered(x);
    let [s1, s2, s3, s4] = power_sums(&z);
    let mut k = from_power_sums(x.len() as f64, s1, s2, s3, s4);
    k.mean += center;
    Ok(k)
}

/// k-statistics and leave-one-out jackknife errors for one sample.
pub fn coordinate_cumulants(x: &[f64]) -> Result<CoordinateCumulants> {
    if x.len() < 5 {
        return Err(param("m", "jackknife k-statistics need at least 5 values"));
    }
    let n = x.len() as f64;
    let (center, z) = centered(x);
    let [s1, s2, s3, s4] = power_sums(&z);
    let mut estimate = from_power_sums(n, s1, s2, s3, s4);
    estimate.mean += center;

    let loo: Vec<KStatistics> = z
        .iter()
        .map(|&v| {
            let v2 = v * v;
            from_power_sums(n - 1.0, s1 - v, s2 - v2, s3 - v2 * v, s4 - v2 * v2)
        })
        .collect();
    let se = |f: fn(&KStatistics) -> f64| {
        let mean = loo.iter().map(f).sum::<f64>() / n;
        ((n - 1.0) / n * loo.iter().map(|k| (f(k) - mean).powi(2)).sum::<f64>()).sqrt()
    };
    Ok(CoordinateCumulants {
        estimate,
        stderr: KStatistics {
            mean: se(|k| k.mean),
            k2: se(|k| k.k2),
            k3: se(|k| k.k3),
            k4: se(|k| k.k4),
        },
    })
}

/// Smallest cloud accepted by [`cumulant_diagnostics`].
pub const MIN_DIAGNOSTIC_POINTS: usize = 100;

/// Per-coordinate cumulants of a cloud.
pub fn cumulant_diagnostics(cloud: &SampleCloud) -> Result<Vec<CoordinateCumulants>> {
    if cloud.len() < MIN_DIAGNOSTIC_POINTS {
        return Err(param(
            "m",
            format!("cumulant diagnostics need at least {MIN_DIAGNOSTIC_POINTS} points"),
        ));
    }
    (0..cloud.dim())
        .into_par_iter()
        .map(|j| coordinate_cumulants(&cloud.points.column(j).to_vec()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Textbook k-statistics via central moments m_r.
    fn oracle(x: &[f64]) -> KStatistics {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let m = |r: i32| x.iter().map(|v| (v - mean).powi(r)).sum::<f64>() / n;
        let (m2, m3, m4) = (m(2), m(3), m(4));
        KStatistics {
            mean,
            k2: n / (n - 1.0) * m2,
            k3: n * n / ((n - 1.0) * (n - 2.0)) * m3,
            k4: n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0)),
        }
    }

    #[test]
    fn matches_central_moment_formulas() {
        let x: Vec<f64> = (0..37)
            .map(|i| ((i * 13) % 17) as f64 * 0.3 + (i as f64).sin())
            .collect();
        let k = k_statistics(&x).unwrap();
        let o = oracle(&x);
        assert_relative_eq!(k.mean, o.mean, max_relative = 1e-12);
        assert_relative_eq!(k.k2, o.k2, max_relative = 1e-12);
        assert_relative_eq!(k.k3, o.k3, max_relative = 1e-10);
        assert_relative_eq!(k.k4, o.k4, max_relative = 1e-10);
    }

    #[test]
    fn constant_data() {
        let c = coordinate_cumulants(&[0.1; 200]).unwrap();
        assert_eq!(c.estimate.mean, 0.1);
        assert_eq!((c.estimate.k2, c.estimate.k3, c.estimate.k4), (0.0, 0.0, 0.0));
        assert_eq!(c.stderr.k4, 0.0);
    }

    #[test]
    fn shift_invariance() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).cos().powi(3)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 1e3).collect();
        let (a, b) = (k_statistics(&x).unwrap(), k_statistics(&y).unwrap());
        assert_relative_eq!(a.k2, b.k2, max_relative = 1e-9);
        assert_relative_eq!(a.k4, b.k4, max_relative = 1e-6);
    }

    #[test]
    fn jackknife_se_of_mean_is_standard_error() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 1.7).sin()).collect();
        let c = coordinate_cumulants(&x).unwrap();
        let o = oracle(&x);
        assert_relative_eq!(c.stderr.mean, (o.k2 / 40.0).sqrt(), max_relative = 1e-10);
    }
}
