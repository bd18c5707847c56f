//! Matrix and tensor ensembles built from a sampled `X_{n,d}`, and samplers
//! for the Gaussian comparison ensembles.
//!
//! All Wishart-type ensembles share one centered Gram routine; the scaled
//! (`Ŵ`) and Rosenblatt (`S`) versions are obtained from `W` by a scalar
//! factor so the three stay algebraically consistent.

use itertools::Itertools;
use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::kernels::{kernel_sums, CorrelationKernel, KernelSpec};
use crate::linalg::{clipped_eigen_factor, to_array2};
use crate::rng::seeded;
use crate::sampler::{GaussianMatrixSample, NestedFgnPath};
use crate::Scalar;

/// Relative eigenvalue floor for the overall-correlation Gaussian target.
pub const TARGET_CLIP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// `sqrt(d) (X X^T / d - I)`
    WishartW,
    /// `W̃_ij = d^{-1/2} sum_k (X_ik X_jk - r(i-j))`
    ShiftedWishart,
    /// `d^{2-2H} (X X^T / d - I)`
    ScaledWishartHat,
    /// Discretized Rosenblatt-Wishart matrix `S_{n,d}`
    RosenblattDiscrete,
    /// Gaussian matrix with the covariance of `W` (or `W̃`)
    GaussianTargetG,
    /// GOE-type matrix with variances `2||s||^2` / `||s||^2`
    GoeTargetZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// `2d` steps (the fine grid of the nested path)
    Fine,
    /// `d` steps (pairwise aggregated)
    Coarse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianTarget {
    MatchedG,
    GoeZ,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col_kernel: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_kernel: Option<KernelSpec>,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
}

/// A symmetric `n x n` realization plus provenance.
#[derive(Clone, Debug)]
pub struct EnsembleMatrix<T> {
    pub kind: EnsembleKind,
    pub n: usize,
    pub values: Array2<T>,
    pub params: EnsembleParams,
    pub seed: u64,
}

#[derive(Serialize)]
struct Provenance<'a> {
    kind: EnsembleKind,
    params: &'a EnsembleParams,
    seed: u64,
}

#[derive(Serialize)]
struct EnsembleJson<'a> {
    kind: EnsembleKind,
    n: usize,
    provenance: Provenance<'a>,
    values: Vec<Vec<f64>>,
}

impl<T: Scalar> EnsembleMatrix<T> {
    /// First line `n`, then one comma-separated line per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = EnsembleJson {
            kind: self.kind,
            n: self.n,
            provenance: Provenance {
                kind: self.kind,
                params: &self.params,
                seed: self.seed,
            },
            values: self
                .values
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
        };
        serde_json::to_string(&doc).expect("ensemble serializes")
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.values[[i, j]].to_bits_eq(self.values[[j, i]])))
    }

    /// Drops the last row and column.
    pub fn leading_minor(&self) -> Self {
        let m = self.n - 1;
        Self {
            kind: self.kind,
            n: m,
            values: self.values.slice(ndarray::s![..m, ..m]).to_owned(),
            params: self.params.clone(),
            seed: self.seed,
        }
    }
}

trait BitEq {
    fn to_bits_eq(self, other: Self) -> bool;
}

impl<T: Scalar> BitEq for T {
    fn to_bits_eq(self, other: Self) -> bool {
        self == other || (self.is_nan() && other.is_nan())
    }
}

/// `d^{-1/2} sum_k (x_ik x_jk - shift(i, j))` for `i <= j`, mirrored.
fn centered_gram<T: Scalar>(x: ArrayView2<T>, shift: impl Fn(usize, usize) -> T) -> Array2<T> {
    let (n, d) = x.dim();
    let scale = T::from_count(d).sqrt().recip();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.row(i);
        for j in i..n {
            let c = shift(i, j);
            let acc = xi
                .iter()
                .zip(x.row(j).iter())
                .fold(T::zero(), |acc, (&a, &b)| acc + (a * b - c));
            let v = acc * scale;
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    out
}

/// Entries of `W` for a raw `n x d` matrix.
pub fn wishart_values<T: Scalar>(x: ArrayView2<T>) -> Array2<T> {
    centered_gram(x, |i, j| if i == j { T::one() } else { T::zero() })
}

/// Entries of `W̃` for row kernel `r`.
pub fn shifted_wishart_values<T: Scalar>(x: ArrayView2<T>, r: &CorrelationKernel<T>) -> Array2<T> {
    centered_gram(x, |i, j| r.eval(i as i64 - j as i64))
}

fn check_long_memory<T: Scalar>(hurst: T) -> Result<()> {
    if hurst > T::lit(0.75) && hurst < T::one() {
        Ok(())
    } else {
        Err(param(
            "H",
            format!("the Rosenblatt scaling needs 3/4 < H < 1, got {hurst}"),
        ))
    }
}

/// Factor `d^{3/2 - 2H}` turning `W` into `Ŵ`.
pub fn rosenblatt_scale<T: Scalar>(hurst: T, d: usize) -> T {
    T::from_count(d).powf(T::lit(1.5) - hurst - hurst)
}

pub fn build_wishart<T: Scalar>(x: &GaussianMatrixSample<T>) -> EnsembleMatrix<T> {
    EnsembleMatrix {
        kind: EnsembleKind::WishartW,
        n: x.n,
        values: wishart_values(x.entries.view()),
        params: EnsembleParams {
            d: x.d,
            col_kernel: Some(x.col_kernel.spec()),
            row_kernel: Some(x.row_kernel.spec()),
            ..Default::default()
        },
        seed: x.seed,
    }
}

pub fn build_shifted_wishart<T: Scalar>(x: &GaussianMatrixSample<T>, r: &CorrelationKernel<T>) -> EnsembleMatrix<T> {
    EnsembleMatrix {
        kind: EnsembleKind::ShiftedWishart,
        n: x.n,
        values: shifted_wishart_values(x.entries.view(), r),
        params: EnsembleParams {
            d: x.d,
            col_kernel: Some(x.col_kernel.spec()),
            row_kernel: Some(r.spec()),
            ..Default::default()
        },
        seed: x.seed,
    }
}

/// `Ŵ = d^{3/2-2H} W`, for `X` sampled with column kernel `fGn(H)`, `H > 3/4`.
pub fn build_scaled_wishart<T: Scalar>(x: &GaussianMatrixSample<T>, hurst: T) -> Result<EnsembleMatrix<T>> {
    check_long_memory(hurst)?;
    let mut m = build_wishart(x);
    let factor = rosenblatt_scale(hurst, x.d);
    m.values.mapv_inplace(|v| v * factor);
    m.kind = EnsembleKind::ScaledWishartHat;
    m.params.hurst = Some(hurst.to_f64_lossy());
    Ok(m)
}

/// `S_{n,D}` values at the given resolution: `D = 2d` from the fine
/// increments, `D = d` from the aggregated ones. Increments over a cell of
/// width `1/D` equal `D^{-H}` times unit-lag fGn by self-similarity, so
/// `S(D) = D^{3/2-2H} W(unit increments)`.
pub fn rosenblatt_values<T: Scalar>(path: &NestedFgnPath<T>, resolution: Resolution) -> Array2<T> {
    match resolution {
        Resolution::Fine => {
            let steps = 2 * path.d;
            let mut w = wishart_values(path.fine_increments.view());
            let f = rosenblatt_scale(path.hurst, steps);
            w.mapv_inplace(|v| v * f);
            w
        }
        Resolution::Coarse => {
            // a sum of two unit increments has variance 2^{2H}
            let unit = T::lit(2.0).powf(-path.hurst);
            let unit_incr = path.coarse_increments.mapv(|v| v * unit);
            let mut w = wishart_values(unit_incr.view());
            let f = rosenblatt_scale(path.hurst, path.d);
            w.mapv_inplace(|v| v * f);
            w
        }
    }
}

pub fn build_rosenblatt_discrete<T: Scalar>(path: &NestedFgnPath<T>, resolution: Resolution) -> EnsembleMatrix<T> {
    let steps = match resolution {
        Resolution::Fine => 2 * path.d,
        Resolution::Coarse => path.d,
    };
    EnsembleMatrix {
        kind: EnsembleKind::RosenblattDiscrete,
        n: path.n,
        values: rosenblatt_values(path, resolution),
        params: EnsembleParams {
            d: steps,
            col_kernel: Some(KernelSpec::Fgn {
                hurst: path.hurst.to_f64_lossy(),
            }),
            hurst: Some(path.hurst.to_f64_lossy()),
            resolution: Some(resolution),
            ..Default::default()
        },
        seed: path.seed,
    }
}

/// Position of `(i, j)`, `i <= j`, in the half-vector ordering
/// `(11, 12, ..., 1n, 22, ..., nn)`.
pub fn half_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i.saturating_sub(1)) / 2 - if i > 0 { i } else { 0 } + j
}

/// Covariance of the half-vector of `W̃` (equivalently `G^{(r,s)}`):
/// `E[G_ij G_uv] = (r(i-u) r(v-j) + r(i-v) r(u-j)) / d * sum_{k,l} s(k-l)^2`.
/// `weighted_sq` is `(1/d) sum_{k,l=1..d} s(k-l)^2`.
pub fn matched_covariance<T: Scalar>(r: &CorrelationKernel<T>, weighted_sq: T, n: usize) -> DMatrix<f64> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let m = pairs.len();
    let rr = |a: usize, b: usize| r.eval(a as i64 - b as i64).to_f64_lossy();
    let w = weighted_sq.to_f64_lossy();
    DMatrix::from_fn(m, m, |a, b| {
        let (i, j) = pairs[a];
        let (u, v) = pairs[b];
        (rr(i, u) * rr(v, j) + rr(i, v) * rr(u, j)) * w
    })
}

enum TargetLaw<T> {
    /// independent entries with the given standard deviations
    Independent { diag_sd: T, off_sd: T },
    /// half-vector `F z` with `F F^T` the covariance
    Factor(Array2<T>),
}

/// Reusable sampler for `G` or `Z`.
pub struct GaussianTargetSampler<T: Scalar> {
    target: GaussianTarget,
    n: usize,
    law: TargetLaw<T>,
    params: EnsembleParams,
}

impl<T: Scalar> GaussianTargetSampler<T> {
    pub fn new(
        target: GaussianTarget,
        s: &CorrelationKernel<T>,
        r: Option<&CorrelationKernel<T>>,
        n: usize,
        d: usize,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(param("n, d", "dimensions must be positive"));
        }
        let params = EnsembleParams {
            d,
            col_kernel: Some(s.spec()),
            row_kernel: r.map(|r| r.spec()),
            ..Default::default()
        };
        let law = match target {
            GaussianTarget::GoeZ => {
                let l2 = s.l2_norm_sq();
                if !l2.is_finite() {
                    return Err(Error::NotSquareSummable);
                }
                TargetLaw::Independent {
                    diag_sd: (T::lit(2.0) * l2).sqrt(),
                    off_sd: l2.sqrt(),
                }
            }
            GaussianTarget::MatchedG => {
                let v = kernel_sums(s, d).sum_weighted_sq;
                match r {
                    Some(r) if !r.is_delta() => {
                        let cov = matched_covariance(r, v, n);
                        let (factor, _) = clipped_eigen_factor(&cov, TARGET_CLIP);
                        TargetLaw::Factor(to_array2(&factor))
                    }
                    _ => TargetLaw::Independent {
                        diag_sd: (T::lit(2.0) * v).sqrt(),
                        off_sd: v.sqrt(),
                    },
                }
            }
        };
        Ok(Self { target, n, law, params })
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Array2<T> {
        let n = self.n;
        let mut out = Array2::zeros((n, n));
        match &self.law {
            TargetLaw::Independent { diag_sd, off_sd } => {
                for i in 0..n {
                    for j in i..n {
                        let sd = if i == j { *diag_sd } else { *off_sd };
                        let v = sd * T::standard_normal(rng);
                        out[[i, j]] = v;
                        out[[j, i]] = v;
                    }
                }
            }
            TargetLaw::Factor(f) => {
                let z = Array1::from_shape_fn(f.ncols(), |_| T::standard_normal(rng));
                let half = f.dot(&z);
                let mut idx = 0;
                for i in 0..n {
                    for j in i..n {
                        out[[i, j]] = half[idx];
                        out[[j, i]] = half[idx];
                        idx += 1;
                    }
                }
            }
        }
        out
    }

    pub fn sample(&self, seed: u64) -> EnsembleMatrix<T> {
        EnsembleMatrix {
            kind: match self.target {
                GaussianTarget::MatchedG => EnsembleKind::GaussianTargetG,
                GaussianTarget::GoeZ => EnsembleKind::GoeTargetZ,
            },
            n: self.n,
            values: self.sample_values(&mut seeded(seed)),
            params: self.params.clone(),
            seed,
        }
    }
}

/// Samples `G^{(s)}` (row-independent, `r = None`), `G^{(r,s)}`, or `Z^{(s)}`.
pub fn sample_gaussian_target<T: Scalar>(
    target: GaussianTarget,
    s: &CorrelationKernel<T>,
    r: Option<&CorrelationKernel<T>>,
    n: usize,
    d: usize,
    seed: u64,
) -> Result<EnsembleMatrix<T>> {
    Ok(GaussianTargetSampler::new(target, s, r, n, d)?.sample(seed))
}

/// Off-diagonal components `Y_j` of the random `p`-tensor, indexed by strictly
/// increasing tuples (lexicographic order).
#[derive(Clone, Debug)]
pub struct TensorSample<T> {
    pub p: usize,
    pub n: usize,
    pub d: usize,
    pub tuples: Vec<Vec<usize>>,
    pub values: Vec<T>,
}

impl<T: Scalar> TensorSample<T> {
    pub fn get(&self, tuple: &[usize]) -> Option<T> {
        self.tuples
            .binary_search_by(|t| t.as_slice().cmp(tuple))
            .ok()
            .map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// All strictly increasing `p`-tuples from `0..n`.
pub fn increasing_tuples(n: usize, p: usize) -> Vec<Vec<usize>> {
    (0..n).combinations(p).collect()
}

/// `Y_j = d^{-1/2} sum_i prod_k X_{j_k, i}` over increasing tuples, from a raw matrix.
pub fn p_tensor_values<T: Scalar>(x: ArrayView2<T>, tuples: &[Vec<usize>]) -> Vec<T> {
    let d = x.ncols();
    let scale = T::from_count(d).sqrt().recip();
    tuples
        .iter()
        .map(|t| {
            let mut acc = T::zero();
            for col in 0..d {
                acc = acc + t.iter().fold(T::one(), |p, &row| p * x[[row, col]]);
            }
            acc * scale
        })
        .collect()
}

pub fn build_p_tensor<T: Scalar>(x: &GaussianMatrixSample<T>, p: usize) -> Result<TensorSample<T>> {
    if p < 2 {
        return Err(param("p", format!("tensor order must be at least 2, got {p}")));
    }
    if p > x.n {
        return Err(param("p", format!("tensor order {p} exceeds n = {}", x.n)));
    }
    if !(x.row_kernel.is_delta() && x.col_kernel.is_delta()) {
        return Err(param("X", "p-tensors are defined for i.i.d. standard Gaussian entries"));
    }
    let tuples = increasing_tuples(x.n, p);
    let values = p_tensor_values(x.entries.view(), &tuples);
    Ok(TensorSample {
        p,
        n: x.n,
        d: x.d,
        tuples,
        values,
    })
}
