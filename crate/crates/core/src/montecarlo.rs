//! Replicate harness and small summary statistics.
//!
//! Replicate `i` always draws from stream `i` of the experiment seed, so a run
//! is bit-for-bit reproducible regardless of the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Result};
use crate::rng::{replicate_rng, SimRng};

/// Runs `f(i, rng_i)` for `i in 0..replicates` and returns results in
/// replicate order. `threads = Some(k)` runs on a private pool of `k` workers;
/// `None` uses the global pool.
pub fn run_replicates<R, F>(replicates: usize, seed: u64, threads: Option<usize>, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize, &mut SimRng) -> R + Sync,
{
    let job = || {
        (0..replicates)
            .into_par_iter()
            .map(|i| f(i, &mut replicate_rng(seed, i as u64)))
            .collect()
    };
    match threads {
        None => Ok(job()),
        Some(0) => Err(param("threads", "must be positive")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| param("threads", e.to_string()))
            .map(|pool| pool.install(job)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// `|mean - target| / se` (infinite when `se = 0` and the mean misses).
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.se
        }
    }

    pub fn within(&self, target: f64, ses: f64) -> bool {
        self.z_score(target) <= ses
    }
}

/// Sample mean and its standard error.
pub fn mean_se(x: &[f64]) -> MeanSe {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    MeanSe {
        mean,
        se: (var / n).sqrt(),
    }
}

/// Unbiased sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Estimate of `E[xy]` with its standard error, for centered quantities.
pub fn product_moment(x: &[f64], y: &[f64]) -> MeanSe {
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    mean_se(&prods)
}

/// Least-squares line through `(log2 x, log2 y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub residuals: Vec<f64>,
}

pub fn fit_log2_slope(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(param("points", "need at least two (x, y) pairs of equal length"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(param("points", "log-log fit needs positive finite values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = lx.iter().zip(&ly).map(|(a, b)| b - intercept - slope * a).collect();
    let slope_se = if lx.len() > 2 {
        (residuals.iter().map(|r| r * r).sum::<f64>() / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        intercept,
        slope_se,
        residuals,
    })
}
