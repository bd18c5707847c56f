//! Second-chaos kernel algebra for the Wishart entries: contraction norms of
//! `f_ij ⊗₁ f_pq`, the derivative-bracket variances they control, and the
//! inner products behind the Rosenblatt-Wishart limit.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{param, Result};
use crate::kernels::{fgn_unchecked, kernel_sums, CorrelationKernel};
use crate::linalg::SymmetricToeplitz;
use crate::Scalar;

/// Which pair of entry kernels is contracted (rows independent).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionCase {
    /// `f_ii ⊗₁ f_ii`
    Diagonal,
    /// `f_ij ⊗₁ f_ij`, `i != j`
    OffDiagonal,
    /// `f_ij ⊗₁ f_kl` with `{i,j} ∩ {k,l} = ∅`
    Cross,
}

impl ContractionCase {
    /// Representative indices (1-based) for reporting.
    fn indices(self) -> [usize; 4] {
        match self {
            Self::Diagonal => [1, 1, 1, 1],
            Self::OffDiagonal => [1, 2, 1, 2],
            Self::Cross => [1, 2, 3, 4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport<T> {
    pub case: Option<ContractionCase>,
    pub indices: [usize; 4],
    pub d: usize,
    pub norm_sq: T,
    /// Upper bound `c (1/d) (sum_{|k|<=d} |s(k)|^{4/3})^3` with the case constant.
    pub bound_rhs: T,
    /// `norm_sq / bound_rhs` (0 when both vanish).
    pub ratio: T,
    /// Fast value agreed with the literal quadruple sum (only checked for small `d`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force_agrees: Option<bool>,
}

/// Largest `d` for which reports also run the O(d^4) cross-check.
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// `sum_{k,l,u,v=1..d} s(k-l) s(l-u) s(u-v) s(v-k) = trace(T_s^4)` via FFT products.
pub fn quadruple_sum<T: Scalar>(s: &CorrelationKernel<T>, d: usize) -> T {
    if s.is_delta() {
        return T::from_count(d);
    }
    SymmetricToeplitz::new(s.lags(d)).trace_fourth_power()
}

/// The literal O(d^4) quadruple sum.
pub fn quadruple_sum_brute_force<T: Scalar>(s: &CorrelationKernel<T>, d: usize) -> T {
    let lag = |a: usize, b: usize| s.eval(a as i64 - b as i64);
    let mut total = T::zero();
    for k in 0..d {
        for l in 0..d {
            let a = lag(k, l);
            for u in 0..d {
                let b = a * lag(l, u);
                for v in 0..d {
                    total = total + b * lag(u, v) * lag(v, k);
                }
            }
        }
    }
    total
}

fn ratio<T: Scalar>(num: T, den: T) -> T {
    if num == T::zero() {
        T::zero()
    } else {
        num / den
    }
}

/// `||f_ij ⊗₁ f_pq||²` for independent rows in the three structural cases.
///
/// Diagonal: `d^{-2}` times the quadruple sum, capped by `K^3/d`.
/// OffDiagonal: the two row blocks are orthogonal, each carrying `1/16` of the
/// diagonal norm, so the value is exactly `1/8` of it; cap `K^3/(4d)`.
/// Cross: disjoint rows are orthogonal, so the contraction vanishes.
pub fn contraction_norm_sq_row_independent<T: Scalar>(
    s: &CorrelationKernel<T>,
    d: usize,
    case: ContractionCase,
) -> Result<ContractionReport<T>> {
    if d == 0 {
        return Err(param("d", "must be positive"));
    }
    let k = kernel_sums(s, d).sum_abs_43;
    let cap = k * k * k / T::from_count(d);
    let dsq = T::from_count(d) * T::from_count(d);
    let (norm_sq, bound_rhs, brute) = match case {
        ContractionCase::Cross => (T::zero(), T::zero(), None),
        ContractionCase::Diagonal | ContractionCase::OffDiagonal => {
            let q = quadruple_sum(s, d);
            let brute = (d <= BRUTE_FORCE_LIMIT).then(|| {
                let b = quadruple_sum_brute_force(s, d);
                (q - b).abs() <= T::lit(1e-10) * b.abs().max(T::one())
            });
            if case == ContractionCase::Diagonal {
                (q / dsq, cap, brute)
            } else {
                (q / (T::lit(8.0) * dsq), cap / T::lit(4.0), brute)
            }
        }
    };
    Ok(ContractionReport {
        case: Some(case),
        indices: case.indices(),
        d,
        norm_sq,
        bound_rhs,
        ratio: ratio(norm_sq, bound_rhs),
        brute_force_agrees: brute,
    })
}

/// `Var(½ <DW_ij, DW_kl>) = 8 ||f_ij ⊗₁ f_kl||²`.
pub fn variance_of_derivative_bracket<T: Scalar>(
    s: &CorrelationKernel<T>,
    d: usize,
    case: ContractionCase,
) -> Result<T> {
    let report = contraction_norm_sq_row_independent(s, d, case)?;
    Ok(T::lit(8.0) * report.norm_sq)
}

/// The sixteen-term row-correlation factor for `f_ij ⊗₁ f_pq` when rows are
/// correlated through `r`, transcribed term by term.
pub fn overall_correlation_factor<T: Scalar>(r: &CorrelationKernel<T>, i: usize, j: usize, p: usize, q: usize) -> T {
    let r = |a: usize, b: usize| r.eval(a as i64 - b as i64);
    let sq = |x: T| x * x;
    sq(r(j, q))
        + r(j, q) * r(p, j) * r(p, q)
        + r(j, i) * r(q, j) * r(i, q)
        + r(i, j) * r(p, q) * r(i, p) * r(j, q)
        + sq(r(p, j))
        + r(p, q) * r(j, q) * r(p, j)
        + r(i, j) * r(p, q) * r(i, q) * r(p, j)
        + r(i, j) * r(i, p) * r(p, j)
        + sq(r(i, q))
        + sq(r(i, p))
        + r(i, q) * r(i, j) * r(j, q)
        + r(i, q) * r(i, j) * r(p, q) * r(p, j)
        + r(i, q) * r(p, q) * r(i, p)
        + r(i, p) * r(i, j) * r(p, q) * r(j, q)
        + r(i, p) * r(i, j) * r(p, j)
        + r(i, p) * r(p, q) * r(q, i)
}

/// `||f_ij ⊗₁ f_pq||² = X_ijpq / (16 d²) · Σ s s s s` for correlated rows,
/// with cap `X_ijpq K^3 / (16 d)`. Indices are 0-based.
pub fn overall_contraction_report<T: Scalar>(
    s: &CorrelationKernel<T>,
    r: &CorrelationKernel<T>,
    d: usize,
    (i, j, p, q): (usize, usize, usize, usize),
) -> Result<ContractionReport<T>> {
    if d == 0 {
        return Err(param("d", "must be positive"));
    }
    let x = overall_correlation_factor(r, i, j, p, q);
    let k = kernel_sums(s, d).sum_abs_43;
    let df = T::from_count(d);
    let sixteen = T::lit(16.0);
    let norm_sq = x * quadruple_sum(s, d) / (sixteen * df * df);
    let bound_rhs = x * k * k * k / (sixteen * df);
    Ok(ContractionReport {
        case: None,
        indices: [i + 1, j + 1, p + 1, q + 1],
        d,
        norm_sq,
        bound_rhs,
        ratio: ratio(norm_sq, bound_rhs),
        brute_force_agrees: None,
    })
}

fn check_rosenblatt_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.75 && hurst < 1.0 {
        Ok(())
    } else {
        Err(param("H", format!("needs 3/4 < H < 1, got {hurst}")))
    }
}

/// `(1 or ½) H²(2H-1)² ∫∫_{[0,1]²} |u-v|^{4H-4}`, using
/// `∫∫ |u-v|^a = 2/((a+1)(a+2))`.
pub fn rosenblatt_inner_product_limit(hurst: f64, diagonal: bool) -> Result<f64> {
    check_rosenblatt_hurst(hurst)?;
    let h = hurst;
    let c = h * h * (2.0 * h - 1.0).powi(2);
    let integral = 2.0 / ((4.0 * h - 3.0) * (4.0 * h - 2.0));
    Ok(if diagonal { c * integral } else { 0.5 * c * integral })
}

/// Inner product of the step kernels at resolutions `d` and `d'`:
/// `H²(2H-1)²/(dd') Σ_{k,l} (dd' ∫_{cell_k}∫_{cell_l} |u-v|^{2H-2})²`.
///
/// Each cell integral is exact. On the common grid of spacing `1/L`,
/// `L = lcm(d, d')`, the integral over a unit cell pair at integer offset `m`
/// is `L^{-2H} s_H(m) / (H(2H-1))` (second difference of the antiderivative),
/// so every cell is a finite sum of fGn covariances; this avoids the
/// cancellation of differencing `|x|^{2H}` directly at large offsets.
pub fn finite_d_inner_product(hurst: f64, d: usize, d2: usize, diagonal: bool) -> Result<f64> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return Err(param("H", format!("needs 1/2 < H < 1, got {hurst}")));
    }
    if d == 0 || d2 == 0 {
        return Err(param("d", "resolutions must be positive"));
    }
    let s = |m: i64| fgn_unchecked(hurst, m);
    let lcm = d / gcd(d, d2) * d2;
    let (p, q) = (lcm / d, lcm / d2);

    // offset t = k p - l q between cell starts on the fine grid
    let sum_sq = if p == 1 && q == 1 {
        let mut acc = s(0) * s(0) * d as f64;
        for m in (1..d).rev() {
            let v = s(m as i64);
            acc += 2.0 * (d - m) as f64 * v * v;
        }
        acc
    } else {
        // weights of a - b for a in 0..p, b in 0..q
        let mut weights: Vec<(i64, f64)> = Vec::new();
        for m in -(q as i64 - 1)..=(p as i64 - 1) {
            let lo = 0.max(m);
            let hi = (p as i64 - 1).min(m + q as i64 - 1);
            if hi >= lo {
                weights.push((m, (hi - lo + 1) as f64));
            }
        }
        let mut counts: HashMap<i64, u64> = HashMap::new();
        for k in 0..d {
            for l in 0..d2 {
                *counts.entry((k * p) as i64 - (l * q) as i64).or_default() += 1;
            }
        }
        let mut offsets: Vec<(i64, u64)> = counts.into_iter().collect();
        offsets.sort_unstable_by_key(|&(t, _)| std::cmp::Reverse(t.abs()));
        offsets
            .into_iter()
            .map(|(t, c)| {
                let f: f64 = weights.iter().map(|&(m, w)| w * s(t + m)).sum();
                c as f64 * f * f
            })
            .sum()
    };
    let value = (d as f64) * (d2 as f64) * (lcm as f64).powf(-4.0 * hurst) * sum_sq;
    Ok(if diagonal { value } else { 0.5 * value })
}

/// `E[(S_ii(d) - S_ii(2d))²]` for the nested discretizations, from the exact
/// inner products (second-chaos isometry: `E[I_2(f) I_2(g)] = 2<f, g>`).
pub fn rosenblatt_coupling_mse(hurst: f64, d: usize, diagonal: bool) -> Result<f64> {
    let a = finite_d_inner_product(hurst, d, d, diagonal)?;
    let b = finite_d_inner_product(hurst, 2 * d, 2 * d, diagonal)?;
    let c = finite_d_inner_product(hurst, d, 2 * d, diagonal)?;
    Ok(2.0 * (a + b - 2.0 * c))
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
