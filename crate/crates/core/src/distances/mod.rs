//! Empirical distances between clouds of half-vectorized matrices.

mod assignment;
mod cumulants;
mod energy;

pub use assignment::{empirical_wasserstein2, solve_assignment, MAX_ASSIGNMENT_POINTS};
pub use cumulants::{
    coordinate_cumulants, cumulant_diagnostics, k_statistics, CoordinateCumulants, KStatistics, MIN_DIAGNOSTIC_POINTS,
};
pub use energy::{energy_distance, energy_distance_bootstrap_se, energy_distance_v};

use ndarray::{Array1, Array2, ArrayView1};

use crate::ensembles::EnsembleMatrix;
use crate::error::{param, Error, Result};
use crate::Scalar;

/// `m` points in `R^D`, one per row.
#[derive(Clone, Debug)]
pub struct SampleCloud {
    pub points: Array2<f64>,
    pub provenance: String,
}

impl SampleCloud {
    pub fn new(points: Array2<f64>, provenance: impl Into<String>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(param("points", "cloud must be non-empty"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(param("points", "all coordinates must be finite"));
        }
        Ok(Self {
            points,
            provenance: provenance.into(),
        })
    }

    /// Half-vectorizes each matrix.
    pub fn from_matrices<T: Scalar>(mats: &[EnsembleMatrix<T>], provenance: impl Into<String>) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| param("matrices", "need at least one matrix"))?;
        let dim = first.n * (first.n + 1) / 2;
        let mut points = Array2::zeros((mats.len(), dim));
        for (mut row, m) in points.rows_mut().into_iter().zip(mats) {
            if m.n != first.n {
                return Err(Error::Dimension(format!("matrix sizes {} and {}", first.n, m.n)));
            }
            row.assign(&half_vectorize_values(&m.values).mapv(|v| v.to_f64_lossy()));
        }
        Self::new(points, provenance)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }
}

pub(crate) fn check_dims(a: &SampleCloud, b: &SampleCloud) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "cloud dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `(M_11, M_12, ..., M_1n, M_22, ..., M_nn)`.
pub fn half_vectorize_values<T: Scalar>(m: &Array2<T>) -> Array1<T> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(m[[i, j]]);
        }
    }
    Array1::from(out)
}

pub fn half_vectorize<T: Scalar>(m: &EnsembleMatrix<T>) -> Array1<T> {
    half_vectorize_values(&m.values)
}

/// Inverse of [`half_vectorize_values`].
pub fn from_half<T: Scalar>(half: ArrayView1<T>) -> Result<Array2<T>> {
    let len = half.len();
    // n(n+1)/2 = len
    let n = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if n * (n + 1) / 2 != len {
        return Err(Error::Dimension(format!("{len} is not a triangular number")));
    }
    let mut out = Array2::zeros((n, n));
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            out[[i, j]] = half[idx];
            out[[j, i]] = half[idx];
            idx += 1;
        }
    }
    Ok(out)
}

pub(crate) fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn half_ordering() {
        let m = array![[1.0, 2.0], [2.0, 3.0]];
        assert_eq!(half_vectorize_values(&m).to_vec(), vec![1.0, 2.0, 3.0]);
        let id = Array2::<f64>::eye(3);
        assert_eq!(half_vectorize_values(&id).to_vec(), vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(from_half(half_vectorize_values(&id).view()).unwrap(), id);
        assert!(from_half(Array1::<f64>::zeros(4).view()).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(SampleCloud::new(array![[1.0, f64::NAN]], "x").is_err());
    }
}
