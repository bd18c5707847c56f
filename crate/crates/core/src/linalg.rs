//! Structured linear algebra: FFT-backed symmetric Toeplitz products and the
//! dense PSD factorizations used as sampling fallbacks.

use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::Scalar;

/// Symmetric `d x d` Toeplitz matrix `[t(|i-j|)]` applied through a circulant
/// embedding of size `2^k >= 2d - 1`.
pub struct SymmetricToeplitz<T: Scalar> {
    column: Vec<T>,
    eigen: Vec<Complex<T>>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> SymmetricToeplitz<T> {
    /// `column[k] = t(k)` for `k = 0..d`.
    pub fn new(column: Vec<T>) -> Self {
        let d = column.len();
        assert!(d >= 1);
        let m = (2 * d).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut eigen = vec![Complex::new(T::zero(), T::zero()); m];
        eigen[0].re = column[0];
        for k in 1..d {
            eigen[k].re = column[k];
            eigen[m - k].re = column[k];
        }
        forward.process(&mut eigen);
        let scale = T::from_count(m).recip();
        for e in &mut eigen {
            *e = *e * scale;
        }
        Self {
            column,
            eigen,
            forward,
            inverse,
        }
    }

    pub fn dim(&self) -> usize {
        self.column.len()
    }

    pub fn column(&self) -> &[T] {
        &self.column
    }

    /// Multiplies two real vectors at once by packing them as real and
    /// imaginary parts; the operator is real so the parts do not mix.
    pub fn apply_pair(&self, x: &[T], y: &[T], out_x: &mut [T], out_y: &mut [T]) {
        let d = self.dim();
        let m = self.eigen.len();
        let mut buf = vec![Complex::new(T::zero(), T::zero()); m];
        for i in 0..d {
            buf[i] = Complex::new(x[i], y[i]);
        }
        self.forward.process(&mut buf);
        for (b, e) in buf.iter_mut().zip(&self.eigen) {
            *b = *b * *e;
        }
        self.inverse.process(&mut buf);
        for i in 0..d {
            out_x[i] = buf[i].re;
            out_y[i] = buf[i].im;
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let zeros = vec![T::zero(); x.len()];
        let mut out = vec![T::zero(); x.len()];
        let mut scratch = vec![T::zero(); x.len()];
        self.apply_pair(x, &zeros, &mut out, &mut scratch);
        out
    }

    /// Column `k` of the matrix, read off the defining sequence.
    fn column_vec(&self, k: usize) -> Vec<T> {
        (0..self.dim()).map(|i| self.column[i.abs_diff(k)]).collect()
    }

    /// `trace(T^4) = ||T^2||_F^2 = sum_k ||T t_k||^2` where `t_k` is column `k`.
    ///
    /// Only the first half of the columns is visited: `T` is centrosymmetric, so
    /// column `k` and column `d-1-k` give equal norms.
    pub fn trace_fourth_power(&self) -> T {
        let d = self.dim();
        let half = d.div_ceil(2);
        let mut total = T::zero();
        let mut out_a = vec![T::zero(); d];
        let mut out_b = vec![T::zero(); d];
        let norm_sq = |v: &[T]| v.iter().map(|&x| x * x).sum::<T>();
        let mut k = 0;
        while k < half {
            let a = self.column_vec(k);
            let b = if k + 1 < half {
                self.column_vec(k + 1)
            } else {
                vec![T::zero(); d]
            };
            self.apply_pair(&a, &b, &mut out_a, &mut out_b);
            let weight = |j: usize| if 2 * j + 1 == d { T::one() } else { T::lit(2.0) };
            total = total + weight(k) * norm_sq(&out_a);
            if k + 1 < half {
                total = total + weight(k + 1) * norm_sq(&out_b);
            }
            k += 2;
        }
        total
    }
}

/// How a dense PSD factor was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum FactorKind {
    Cholesky,
    /// Symmetric eigendecomposition with small negative eigenvalues set to zero.
    ClippedEigen {
        clipped: usize,
    },
}

pub fn toeplitz_dense(column: &[f64]) -> DMatrix<f64> {
    let d = column.len();
    DMatrix::from_fn(d, d, |i, j| column[i.abs_diff(j)])
}

/// Returns `F` with `F F^T = C` (up to clipping). Cholesky is tried first;
/// on failure eigenvalues below `rel_clip * max_eigenvalue` are zeroed.
pub fn psd_factor(cov: &DMatrix<f64>, rel_clip: f64) -> (DMatrix<f64>, FactorKind) {
    if let Some(chol) = cov.clone().cholesky() {
        return (chol.l(), FactorKind::Cholesky);
    }
    clipped_eigen_factor(cov, rel_clip)
}

/// Symmetric square root factor `V diag(sqrt(max(lambda, 0)))`, clipping
/// eigenvalues below `rel_clip * max(lambda)`.
pub fn clipped_eigen_factor(cov: &DMatrix<f64>, rel_clip: f64) -> (DMatrix<f64>, FactorKind) {
    let eig = cov.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let floor = rel_clip * max;
    let mut clipped = 0;
    let mut factor = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let root = if lambda <= floor {
            if lambda < 0.0 {
                clipped += 1;
            }
            0.0
        } else {
            lambda.sqrt()
        };
        factor.column_mut(j).scale_mut(root);
    }
    (factor, FactorKind::ClippedEigen { clipped })
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn to_array2<T: Scalar>(m: &DMatrix<f64>) -> Array2<T> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| T::lit(m[(i, j)]))
}
