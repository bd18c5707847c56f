//! Exact samplers for the rectangular Gaussian matrix `X` with covariance
//! `E[X_ij X_i'j'] = r(i-i') s(j-j')`, and for nested-resolution fGn paths.
//!
//! Rows with stationary covariance `s` are drawn by circulant embedding: the
//! Toeplitz covariance is embedded in a circulant matrix of size `M = 2^k >=
//! 2(d-1)` whose eigenvalues are the FFT of its first row. One complex FFT of
//! `sqrt(lambda/M) (Z1 + i Z2)` yields two independent rows (real and imaginary
//! parts). Row correlation `r` is applied afterwards by a dense factor `L_r`.

use std::sync::Arc;

use ndarray::{Array2, ArrayViewMut1, ArrayViewMut2, Axis};
use num_complex::Complex;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::kernels::CorrelationKernel;
use crate::linalg::{psd_factor, to_array2, toeplitz_dense, FactorKind};
use crate::rng::{seeded, SimRng};
use crate::Scalar;

/// Negative circulant eigenvalues smaller than this fraction of the largest
/// eigenvalue are treated as round-off and clipped to zero.
pub const EMBEDDING_CLIP: f64 = 1e-8;

/// Largest row length for which the dense fallback is attempted.
pub const DENSE_FALLBACK_LIMIT: usize = 4096;

/// Eigenvalue clipping threshold (relative) for dense factorizations.
const DENSE_CLIP: f64 = 1e-12;

/// Diagnostics attached to every sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SamplerFlags {
    /// Number of negative circulant eigenvalues set to zero.
    pub clipped_eigenvalues: usize,
    /// Largest `|negative eigenvalue| / max eigenvalue` seen in the embedding.
    pub max_relative_negativity: f64,
    /// The circulant embedding was rejected and a dense factor used instead.
    pub dense_fallback: bool,
    /// The row factor `L_r` needed eigenvalue clipping (Cholesky failed).
    pub row_factor_clipped: bool,
}

impl SamplerFlags {
    pub fn is_exact(&self) -> bool {
        self.clipped_eigenvalues == 0 && !self.dense_fallback && !self.row_factor_clipped
    }
}

enum Strategy<T: Scalar> {
    /// `s` is the delta kernel: i.i.d. entries.
    Independent,
    Circulant {
        sqrt_eigen: Vec<T>,
        fft: Arc<dyn Fft<T>>,
    },
    Dense {
        factor: Array2<T>,
    },
}

/// Reusable sampler for i.i.d. rows of a length-`d` stationary Gaussian vector.
pub struct StationarySampler<T: Scalar> {
    d: usize,
    strategy: Strategy<T>,
    flags: SamplerFlags,
}

impl<T: Scalar> StationarySampler<T> {
    pub fn new(kernel: &CorrelationKernel<T>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(param("d", "row length must be positive"));
        }
        if kernel.is_delta() || d == 1 {
            return Ok(Self {
                d,
                strategy: Strategy::Independent,
                flags: SamplerFlags::default(),
            });
        }

        let m = (2 * (d - 1)).next_power_of_two().max(2);
        let mut row = vec![Complex::new(T::zero(), T::zero()); m];
        for (j, slot) in row.iter_mut().enumerate() {
            slot.re = kernel.eval(j.min(m - j) as i64);
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);

        let max = row.iter().map(|c| c.re).fold(T::neg_infinity(), T::max);
        let min = row.iter().map(|c| c.re).fold(T::infinity(), T::min);
        let negativity = if min < T::zero() {
            (-min / max).to_f64_lossy()
        } else {
            0.0
        };
        let mut flags = SamplerFlags {
            max_relative_negativity: negativity,
            ..SamplerFlags::default()
        };

        if negativity > EMBEDDING_CLIP {
            if d > DENSE_FALLBACK_LIMIT {
                return Err(Error::EmbeddingFailed {
                    len: d,
                    negativity,
                    limit: DENSE_FALLBACK_LIMIT,
                });
            }
            let cov = toeplitz_dense(&kernel.lags(d).iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>());
            let (factor, _) = psd_factor(&cov, DENSE_CLIP);
            flags.dense_fallback = true;
            return Ok(Self {
                d,
                strategy: Strategy::Dense {
                    factor: to_array2(&factor),
                },
                flags,
            });
        }

        let scale = T::from_count(m).recip();
        let sqrt_eigen = row
            .iter()
            .map(|c| {
                if c.re < T::zero() {
                    flags.clipped_eigenvalues += 1;
                    T::zero()
                } else {
                    (c.re * scale).sqrt()
                }
            })
            .collect();
        Ok(Self {
            d,
            strategy: Strategy::Circulant { sqrt_eigen, fft },
            flags,
        })
    }

    pub fn len(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.d == 0
    }

    pub fn flags(&self) -> SamplerFlags {
        self.flags
    }

    /// Overwrites every row of `out` (shape `rows x d`) with an independent draw.
    pub fn fill_rows<R: Rng + ?Sized>(&self, rng: &mut R, mut out: ArrayViewMut2<T>) {
        assert_eq!(out.ncols(), self.d, "row length mismatch");
        match &self.strategy {
            Strategy::Independent => out.iter_mut().for_each(|x| *x = T::standard_normal(rng)),
            Strategy::Dense { factor } => {
                let mut z = vec![T::zero(); self.d];
                for mut row in out.axis_iter_mut(Axis(0)) {
                    z.iter_mut().for_each(|x| *x = T::standard_normal(rng));
                    for (i, slot) in row.iter_mut().enumerate() {
                        *slot = (0..=i).map(|j| factor[[i, j]] * z[j]).sum();
                    }
                }
            }
            Strategy::Circulant { sqrt_eigen, fft } => {
                let mut buf = vec![Complex::new(T::zero(), T::zero()); sqrt_eigen.len()];
                let rows = out.nrows();
                let mut i = 0;
                while i < rows {
                    for (b, &w) in buf.iter_mut().zip(sqrt_eigen) {
                        let re = T::standard_normal(rng);
                        let im = T::standard_normal(rng);
                        *b = Complex::new(w * re, w * im);
                    }
                    fft.process(&mut buf);
                    write_part(out.row_mut(i), &buf, |c| c.re);
                    if i + 1 < rows {
                        write_part(out.row_mut(i + 1), &buf, |c| c.im);
                    }
                    i += 2;
                }
            }
        }
    }

    pub fn sample_rows<R: Rng + ?Sized>(&self, rng: &mut R, rows: usize) -> Array2<T> {
        let mut out = Array2::zeros((rows, self.d));
        self.fill_rows(rng, out.view_mut());
        out
    }
}

fn write_part<T: Scalar>(mut row: ArrayViewMut1<T>, buf: &[Complex<T>], part: impl Fn(&Complex<T>) -> T) {
    for (slot, c) in row.iter_mut().zip(buf) {
        *slot = part(c);
    }
}

/// One realization of `X_{n,d}`.
#[derive(Clone, Debug)]
pub struct GaussianMatrixSample<T: Scalar> {
    pub n: usize,
    pub d: usize,
    /// `n x d`, row-major.
    pub entries: Array2<T>,
    pub row_kernel: CorrelationKernel<T>,
    pub col_kernel: CorrelationKernel<T>,
    pub seed: u64,
    pub flags: SamplerFlags,
}

/// Reusable sampler for `X = L_r Y`, where `Y` has i.i.d. stationary rows.
pub struct SeparableSampler<T: Scalar> {
    n: usize,
    rows: StationarySampler<T>,
    /// `None` when `r` is the delta kernel.
    row_factor: Option<Array2<T>>,
    row_kernel: CorrelationKernel<T>,
    col_kernel: CorrelationKernel<T>,
    flags: SamplerFlags,
}

impl<T: Scalar> SeparableSampler<T> {
    pub fn new(r: &CorrelationKernel<T>, s: &CorrelationKernel<T>, n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(param("n", "row count must be positive"));
        }
        let rows = StationarySampler::new(s, d)?;
        let mut flags = rows.flags();
        let row_factor = if r.is_delta() {
            None
        } else {
            let cov = toeplitz_dense(&r.lags(n).iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>());
            let (factor, kind) = psd_factor(&cov, DENSE_CLIP);
            flags.row_factor_clipped = kind != FactorKind::Cholesky;
            Some(to_array2(&factor))
        };
        Ok(Self {
            n,
            rows,
            row_factor,
            row_kernel: r.clone(),
            col_kernel: s.clone(),
            flags,
        })
    }

    pub fn row_independent(s: &CorrelationKernel<T>, n: usize, d: usize) -> Result<Self> {
        Self::new(&CorrelationKernel::delta(), s, n, d)
    }

    pub fn flags(&self) -> SamplerFlags {
        self.flags
    }

    pub fn sample_entries<R: Rng + ?Sized>(&self, rng: &mut R) -> Array2<T> {
        let y = self.rows.sample_rows(rng, self.n);
        match &self.row_factor {
            None => y,
            Some(l) => l.dot(&y),
        }
    }

    pub fn sample_with_rng(&self, rng: &mut SimRng, seed: u64) -> GaussianMatrixSample<T> {
        GaussianMatrixSample {
            n: self.n,
            d: self.rows.len(),
            entries: self.sample_entries(rng),
            row_kernel: self.row_kernel.clone(),
            col_kernel: self.col_kernel.clone(),
            seed,
            flags: self.flags,
        }
    }

    pub fn sample(&self, seed: u64) -> GaussianMatrixSample<T> {
        self.sample_with_rng(&mut seeded(seed), seed)
    }
}

/// Rows i.i.d. with autocovariance `s`; deterministic in `seed`.
pub fn sample_row_independent<T: Scalar>(
    s: &CorrelationKernel<T>,
    n: usize,
    d: usize,
    seed: u64,
) -> Result<GaussianMatrixSample<T>> {
    Ok(SeparableSampler::row_independent(s, n, d)?.sample(seed))
}

/// Separable covariance `r(i-i') s(j-j')`.
pub fn sample_separable<T: Scalar>(
    r: &CorrelationKernel<T>,
    s: &CorrelationKernel<T>,
    n: usize,
    d: usize,
    seed: u64,
) -> Result<GaussianMatrixSample<T>> {
    Ok(SeparableSampler::new(r, s, n, d)?.sample(seed))
}

/// Unit-lag fGn on a grid of `2d` steps together with its pairwise
/// aggregation to `d` steps. Both views describe the same underlying path.
#[derive(Clone, Debug)]
pub struct NestedFgnPath<T> {
    pub hurst: T,
    pub n: usize,
    pub d: usize,
    /// `n x 2d` unit-lag increments.
    pub fine_increments: Array2<T>,
    /// `n x d`, `coarse[i][p] = fine[i][2p] + fine[i][2p+1]`.
    pub coarse_increments: Array2<T>,
    pub seed: u64,
}

pub struct NestedFgnSampler<T: Scalar> {
    hurst: T,
    n: usize,
    d: usize,
    rows: StationarySampler<T>,
}

impl<T: Scalar> NestedFgnSampler<T> {
    pub fn new(hurst: T, n: usize, d: usize) -> Result<Self> {
        if !(hurst > T::lit(0.75) && hurst < T::one()) {
            return Err(param("H", format!("nested fGn paths need 3/4 < H < 1, got {hurst}")));
        }
        if n == 0 || d == 0 {
            return Err(param("n, d", "dimensions must be positive"));
        }
        let kernel = CorrelationKernel::fgn(hurst)?;
        Ok(Self {
            hurst,
            n,
            d,
            rows: StationarySampler::new(&kernel, 2 * d)?,
        })
    }

    pub fn flags(&self) -> SamplerFlags {
        self.rows.flags()
    }

    pub fn sample_with_rng<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> NestedFgnPath<T> {
        let fine = self.rows.sample_rows(rng, self.n);
        let coarse = Array2::from_shape_fn((self.n, self.d), |(i, p)| fine[[i, 2 * p]] + fine[[i, 2 * p + 1]]);
        NestedFgnPath {
            hurst: self.hurst,
            n: self.n,
            d: self.d,
            fine_increments: fine,
            coarse_increments: coarse,
            seed,
        }
    }
}

pub fn sample_nested_fgn<T: Scalar>(hurst: T, n: usize, d: usize, seed: u64) -> Result<NestedFgnPath<T>> {
    Ok(NestedFgnSampler::new(hurst, n, d)?.sample_with_rng(&mut seeded(seed), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn deterministic_in_seed() {
        let s = CorrelationKernel::<f64>::fgn(0.7).unwrap();
        let a = sample_row_independent(&s, 3, 17, 42).unwrap();
        let b = sample_row_independent(&s, 3, 17, 42).unwrap();
        let c = sample_row_independent(&s, 3, 17, 43).unwrap();
        assert_eq!(a.entries, b.entries);
        assert_ne!(a.entries, c.entries);
        assert!(a.flags.is_exact());
    }

    #[test]
    fn fgn_embedding_is_nonnegative() {
        for h in [0.1, 0.3, 0.6, 0.7, 0.8, 0.95] {
            for d in [2, 3, 64, 1000] {
                let s = CorrelationKernel::<f64>::fgn(h).unwrap();
                let sampler = StationarySampler::new(&s, d).unwrap();
                assert!(!sampler.flags().dense_fallback, "H={h} d={d}");
            }
        }
    }

    #[test]
    fn nested_paths_are_coupled() {
        let path = sample_nested_fgn(0.8f64, 3, 16, 7).unwrap();
        assert_eq!(path.fine_increments.dim(), (3, 32));
        for i in 0..3 {
            for p in 0..16 {
                assert_eq!(
                    path.coarse_increments[[i, p]],
                    path.fine_increments[[i, 2 * p]] + path.fine_increments[[i, 2 * p + 1]]
                );
            }
        }
        assert!(sample_nested_fgn(0.7f64, 1, 4, 0).is_err());
        assert!(sample_nested_fgn(0.75f64, 1, 4, 0).is_err());
    }

    #[test]
    fn lag_one_autocovariance() {
        // s_{0.7}(1) = 0.3195...
        let s = CorrelationKernel::<f64>::fgn(0.7).unwrap();
        let sampler = StationarySampler::new(&s, 64).unwrap();
        let reps = 20_000;
        let mut acc = 0.0;
        for r in 0..reps {
            let mut rng = replicate_rng(11, r);
            let x = sampler.sample_rows(&mut rng, 1);
            acc += x[[0, 10]] * x[[0, 11]];
        }
        let est = acc / reps as f64;
        // SE of a product of two unit normals with corr rho is sqrt(1 + rho^2)/sqrt(reps)
        let se = (1.0f64 + 0.32 * 0.32).sqrt() / (reps as f64).sqrt();
        assert!((est - 0.319_507_910_772_894_2).abs() < 4.0 * se, "{est}");
    }

    #[test]
    fn separable_with_delta_rows_matches_row_independent() {
        let s = CorrelationKernel::<f64>::fgn(0.6).unwrap();
        let a = sample_separable(&CorrelationKernel::delta(), &s, 4, 9, 5).unwrap();
        let b = sample_row_independent(&s, 4, 9, 5).unwrap();
        assert_eq!(a.entries, b.entries);
    }

    #[test]
    fn f32_sampling_works() {
        let s = CorrelationKernel::<f32>::fgn(0.7).unwrap();
        let x = sample_row_independent(&s, 2, 33, 1).unwrap();
        assert!(x.entries.iter().all(|v| v.is_finite()));
    }
}
