//! Stationary correlation kernels `s: Z -> R` with `s(0) = 1`, and the lag sums
//! that drive every bound in [`crate::bounds`].
//!
//! Three kinds are supported: the Kronecker delta (independent entries),
//! fractional Gaussian noise with Hurst index `H`, and a finite symmetric
//! table supplied by the user.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::Scalar;

/// Lags up to this magnitude use the closed-form second difference directly.
/// Beyond it the binomial series is used, which avoids the cancellation of
/// `|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}` (relative error grows like `k^2 eps`,
/// which is visible in f32 already at moderate lags). The series ratio is
/// `1/k^2`, so it converges quickly from `k = 3` on.
pub const DIRECT_LAG_LIMIT: u64 = 2;

/// Tail sums of `s(k)^2` are summed explicitly up to this lag before the
/// integral correction is added.
pub const TAIL_EXPLICIT_LAGS: usize = 1_000_000;

/// Number of fGn lags evaluated eagerly when a kernel is built.
const CACHE_LAGS: usize = 1024;

/// Floor for the spectral check of tabulated kernels.
const PSD_FLOOR: f64 = -1e-10;

/// Serializable description of a kernel, as it appears in configs and reports.
///
/// JSON forms: `{"kind":"delta"}`, `{"kind":"fgn","H":0.7}`,
/// `{"kind":"table","values":[1.0,0.3]}` where `values[k] = s(k)` for `k >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Delta,
    Fgn {
        #[serde(rename = "H")]
        hurst: f64,
    },
    Table {
        values: Vec<f64>,
    },
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Delta => write!(f, "delta"),
            KernelSpec::Fgn { hurst } => write!(f, "fgn:{hurst}"),
            KernelSpec::Table { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "table:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses the short CLI form (`delta`, `fgn:0.7`, `table:1,0.4,0.1`) or a
    /// JSON object.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        match (head.to_ascii_lowercase().as_str(), tail) {
            ("delta", None) => Ok(KernelSpec::Delta),
            ("fgn", Some(h)) => {
                let hurst = h
                    .parse::<f64>()
                    .map_err(|e| param("kernel", format!("bad Hurst index `{h}`: {e}")))?;
                Ok(KernelSpec::Fgn { hurst })
            }
            ("table", Some(vals)) => {
                let values = vals
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| param("kernel", format!("bad table value: {e}")))?;
                Ok(KernelSpec::Table { values })
            }
            _ => Err(param(
                "kernel",
                format!("unrecognised kernel `{s}` (expected delta, fgn:H or table:v0,v1,...)"),
            )),
        }
    }
}

/// Summability class of a kernel, which decides the applicable regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SummabilityClass {
    /// `s` is in `l^{4/3}`: Gaussian regime with the `n^3/d` rate.
    L43,
    /// `s` is square summable but not in `l^{4/3}`.
    L2Only,
    /// `s` is not square summable.
    NotL2,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelKind<T> {
    Delta,
    FractionalGaussianNoise { hurst: T },
    Tabulated { values: Vec<T> },
}

/// An immutable correlation kernel. Cheap to clone and safe to share between
/// threads; fGn lags below 1024 are pre-computed at construction.
#[derive(Clone, Debug)]
pub struct CorrelationKernel<T: Scalar> {
    kind: KernelKind<T>,
    cache: Arc<[T]>,
}

fn check_hurst<T: Scalar>(hurst: T) -> Result<()> {
    if hurst > T::zero() && hurst < T::one() {
        Ok(())
    } else {
        Err(param("H", format!("Hurst index must lie in (0, 1), got {hurst}")))
    }
}

/// Autocovariance of unit-lag fractional Gaussian noise,
/// `½(|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H})`.
pub fn eval_fgn<T: Scalar>(hurst: T, k: i64) -> Result<T> {
    check_hurst(hurst)?;
    Ok(fgn_unchecked(hurst, k))
}

pub(crate) fn fgn_unchecked<T: Scalar>(hurst: T, k: i64) -> T {
    let k = k.unsigned_abs();
    if k == 0 {
        return T::one();
    }
    let two_h = hurst + hurst;
    let kf = T::from_u64(k).expect("lag representable");
    if k <= DIRECT_LAG_LIMIT {
        let one = T::one();
        let half = T::lit(0.5);
        return half * ((kf + one).powf(two_h) + (kf - one).powf(two_h) - T::lit(2.0) * kf.powf(two_h));
    }
    // s(k) = k^{2H} * sum_{m>=1} C(2H, 2m) k^{-2m}
    let inv_k2 = (kf * kf).recip();
    let mut coef = two_h * (two_h - T::one()) * T::lit(0.5);
    let mut power = inv_k2;
    let mut sum = T::zero();
    let mut m = 1u32;
    loop {
        let term = coef * power;
        sum = sum + term;
        if term == T::zero() || term.abs() <= T::epsilon() * sum.abs() || m > 40 {
            break;
        }
        let j = T::from_u32(2 * m).unwrap();
        coef = coef * (two_h - j) * (two_h - j - T::one()) / ((j + T::one()) * (j + T::lit(2.0)));
        power = power * inv_k2;
        m += 1;
    }
    kf.powf(two_h) * sum
}

impl<T: Scalar> CorrelationKernel<T> {
    pub fn delta() -> Self {
        Self {
            kind: KernelKind::Delta,
            cache: Arc::from(vec![T::one()]),
        }
    }

    pub fn fgn(hurst: T) -> Result<Self> {
        check_hurst(hurst)?;
        let cache: Vec<T> = (0..CACHE_LAGS as i64).map(|k| fgn_unchecked(hurst, k)).collect();
        Ok(Self {
            kind: KernelKind::FractionalGaussianNoise { hurst },
            cache: Arc::from(cache),
        })
    }

    /// Builds a finitely supported kernel from `values[k] = s(k)`, `k >= 0`.
    /// Lags past the table are zero. Rejects tables whose symmetric extension
    /// is not positive semidefinite.
    pub fn tabulated(values: Vec<T>) -> Result<Self> {
        let first = *values.first().ok_or_else(|| param("values", "kernel table is empty"))?;
        if first != T::one() {
            return Err(Error::TableOrigin(first.to_f64_lossy()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(param("values", "kernel table contains non-finite entries"));
        }
        let min = spectral_minimum(&values);
        if min < PSD_FLOOR {
            return Err(Error::NotPositiveSemidefinite { min });
        }
        let cache: Arc<[T]> = Arc::from(values.clone());
        Ok(Self {
            kind: KernelKind::Tabulated { values },
            cache,
        })
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::Delta => Ok(Self::delta()),
            KernelSpec::Fgn { hurst } => Self::fgn(T::lit(*hurst)),
            KernelSpec::Table { values } => Self::tabulated(values.iter().map(|&v| T::lit(v)).collect()),
        }
    }

    pub fn spec(&self) -> KernelSpec {
        match &self.kind {
            KernelKind::Delta => KernelSpec::Delta,
            KernelKind::FractionalGaussianNoise { hurst } => KernelSpec::Fgn {
                hurst: hurst.to_f64_lossy(),
            },
            KernelKind::Tabulated { values } => KernelSpec::Table {
                values: values.iter().map(|v| v.to_f64_lossy()).collect(),
            },
        }
    }

    pub fn kind(&self) -> &KernelKind<T> {
        &self.kind
    }

    pub fn hurst(&self) -> Option<T> {
        match self.kind {
            KernelKind::FractionalGaussianNoise { hurst } => Some(hurst),
            _ => None,
        }
    }

    /// `s(k)`; symmetric in `k`.
    #[inline]
    pub fn eval(&self, k: i64) -> T {
        let lag = k.unsigned_abs() as usize;
        match &self.kind {
            KernelKind::Delta => {
                if lag == 0 {
                    T::one()
                } else {
                    T::zero()
                }
            }
            KernelKind::FractionalGaussianNoise { hurst } => match self.cache.get(lag) {
                Some(&v) => v,
                None => fgn_unchecked(*hurst, k),
            },
            KernelKind::Tabulated { values } => values.get(lag).copied().unwrap_or_else(T::zero),
        }
    }

    /// `[s(0), s(1), ..., s(len - 1)]`.
    pub fn lags(&self, len: usize) -> Vec<T> {
        (0..len as i64).map(|k| self.eval(k)).collect()
    }

    /// True when `s(k) = 0` for every `k != 0` (delta, fGn with `H = 1/2`, or
    /// a table with trivial tail).
    pub fn is_delta(&self) -> bool {
        match &self.kind {
            KernelKind::Delta => true,
            KernelKind::FractionalGaussianNoise { hurst } => *hurst == T::lit(0.5),
            KernelKind::Tabulated { values } => values[1..].iter().all(|v| *v == T::zero()),
        }
    }

    pub fn asymptotic_class(&self) -> SummabilityClass {
        match &self.kind {
            KernelKind::Delta | KernelKind::Tabulated { .. } => SummabilityClass::L43,
            KernelKind::FractionalGaussianNoise { hurst } => {
                // |s_H(k)| ~ c |k|^{2H-2}
                let h = *hurst;
                if h == T::lit(0.5) || h < T::lit(0.625) {
                    SummabilityClass::L43
                } else if h < T::lit(0.75) {
                    SummabilityClass::L2Only
                } else {
                    SummabilityClass::NotL2
                }
            }
        }
    }

    /// Absolute summability, needed to pick the sharpest overall-correlation rate.
    pub fn is_summable(&self) -> bool {
        match &self.kind {
            KernelKind::Delta | KernelKind::Tabulated { .. } => true,
            KernelKind::FractionalGaussianNoise { hurst } => *hurst <= T::lit(0.5),
        }
    }

    /// `||s||^2_{l^2}`, `+inf` for kernels outside `l^2`.
    pub fn l2_norm_sq(&self) -> T {
        kernel_sums(self, 1).l2_norm_sq
    }
}

/// Lag sums appearing in the Gaussian-approximation bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelSums<T> {
    pub d: usize,
    /// `sum_{|k|<=d} |s(k)|^{4/3}`
    pub sum_abs_43: T,
    /// `sum_{|k|<=d} (1 - |k|/d) s(k)^2`
    pub sum_weighted_sq: T,
    /// `sum_{|k|>d} s(k)^2`, partly estimated for fGn (see `tail_correction`).
    pub sum_tail_sq: T,
    /// Integral estimate added to the explicit part of `sum_tail_sq`.
    pub tail_correction: T,
    /// `(1/d) sum_{|k|<=d} |k| s(k)^2`
    pub sum_k_sq: T,
    /// `||s||^2_{l^2}`, `+inf` when `s` is not square summable.
    pub l2_norm_sq: T,
    pub square_summable: bool,
}

pub fn kernel_sums<T: Scalar>(s: &CorrelationKernel<T>, d: usize) -> KernelSums<T> {
    assert!(d >= 1, "kernel_sums requires d >= 1");
    let two = T::lit(2.0);
    let four_thirds = T::lit(4.0 / 3.0);
    let df = T::from_count(d);

    if s.is_delta() {
        return KernelSums {
            d,
            sum_abs_43: T::one(),
            sum_weighted_sq: T::one(),
            sum_tail_sq: T::zero(),
            tail_correction: T::zero(),
            sum_k_sq: T::zero(),
            l2_norm_sq: T::one(),
            square_summable: true,
        };
    }

    let (mut acc43, mut accw, mut acck, mut accsq) = (T::zero(), T::zero(), T::zero(), T::zero());
    for k in 1..=d {
        let v = s.eval(k as i64);
        let kf = T::from_count(k);
        let sq = v * v;
        acc43 = acc43 + v.abs().powf(four_thirds);
        accw = accw + (T::one() - kf / df) * sq;
        acck = acck + kf * sq;
        accsq = accsq + sq;
    }

    let (tail, correction, square_summable) = match s.kind() {
        KernelKind::Delta => (T::zero(), T::zero(), true),
        KernelKind::Tabulated { values } => {
            let tail: T = values.iter().skip(d + 1).rev().map(|&v| v * v).sum();
            (two * tail, T::zero(), true)
        }
        KernelKind::FractionalGaussianNoise { hurst } => {
            let h = *hurst;
            if h >= T::lit(0.75) {
                (T::infinity(), T::infinity(), false)
            } else {
                let upper = TAIL_EXPLICIT_LAGS.max(d);
                let mut explicit = T::zero();
                for k in (d + 1..=upper).rev() {
                    let v = fgn_unchecked(h, k as i64);
                    explicit = explicit + v * v;
                }
                // integral of (H(2H-1) x^{2H-2})^2 over [upper, inf)
                let c = h * (two * h - T::one());
                let expo = T::lit(4.0) * h - T::lit(3.0);
                let correction = c * c * T::from_count(upper).powf(expo) / (-expo);
                (two * (explicit + correction), two * correction, true)
            }
        }
    };

    KernelSums {
        d,
        sum_abs_43: T::one() + two * acc43,
        sum_weighted_sq: T::one() + two * accw,
        sum_tail_sq: tail,
        tail_correction: correction,
        sum_k_sq: two * acck / df,
        l2_norm_sq: if square_summable {
            T::one() + two * accsq + tail
        } else {
            T::infinity()
        },
        square_summable,
    }
}

/// Minimum over a fine frequency grid of `v0 + 2 sum_k v_k cos(k w)`, the
/// spectral density of the symmetric zero-extended table. Nonnegativity of this
/// function is equivalent to every Toeplitz truncation being PSD.
fn spectral_minimum<T: Scalar>(values: &[T]) -> f64 {
    let len = values.len();
    if len == 1 {
        return values[0].to_f64_lossy();
    }
    let m = (16 * len + 64).next_power_of_two();
    let mut buf = vec![Complex::new(0.0f64, 0.0); m];
    buf[0].re = values[0].to_f64_lossy();
    for (k, v) in values.iter().enumerate().skip(1) {
        buf[k].re = v.to_f64_lossy();
        buf[m - k].re = v.to_f64_lossy();
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.iter().map(|c| c.re).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fgn_half_is_delta() {
        for k in [0i64, 1, 2, 3, 63, 64, 65, 1000, 999_999] {
            let v = eval_fgn(0.5f64, k).unwrap();
            let expected: f64 = if k == 0 { 1.0 } else { 0.0 };
            assert_eq!(v.to_bits(), expected.to_bits(), "lag {k}");
        }
        assert_eq!(eval_fgn(0.5, 3).unwrap(), 0.0);
    }

    #[test]
    fn fgn_reference_values() {
        // sqrt(2) - 1 and (2^1.6 - 2)/2, evaluated independently at high precision
        assert_relative_eq!(
            eval_fgn(0.75f64, 1).unwrap(),
            0.414_213_562_373_095_1,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            eval_fgn(0.8f64, 1).unwrap(),
            0.515_716_566_510_398,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            eval_fgn(0.7f64, 1).unwrap(),
            0.319_507_910_772_894_3,
            max_relative = 1e-14
        );
    }

    #[test]
    fn fgn_rejects_bad_hurst() {
        for h in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(eval_fgn(h, 1).is_err());
            assert!(CorrelationKernel::<f64>::fgn(h).is_err());
        }
    }

    #[test]
    fn series_matches_direct_form_at_switch() {
        for h in [0.1, 0.3, 0.7, 0.9] {
            for k in [DIRECT_LAG_LIMIT as i64 + 1, 80, 200] {
                let kf = k as f64;
                let direct = 0.5 * ((kf + 1.0).powf(2.0 * h) + (kf - 1.0).powf(2.0 * h) - 2.0 * kf.powf(2.0 * h));
                let series = fgn_unchecked(h, k);
                assert_relative_eq!(series, direct, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn fgn_is_symmetric() {
        let s = CorrelationKernel::<f64>::fgn(0.7).unwrap();
        for k in [1i64, 5, 64, 65, 2000, 123_456] {
            assert_eq!(s.eval(k), s.eval(-k));
        }
    }

    #[test]
    fn asymptotic_ratio_at_large_lag() {
        for h in [0.3, 0.7, 0.9] {
            let k = 100_000i64;
            let ratio = eval_fgn(h, k).unwrap() / (h * (2.0 * h - 1.0) * (k as f64).powf(2.0 * h - 2.0));
            assert!((ratio - 1.0).abs() < 0.01, "H={h}: ratio {ratio}");
        }
    }

    #[test]
    fn classes() {
        let class = |h: f64| CorrelationKernel::<f64>::fgn(h).unwrap().asymptotic_class();
        assert_eq!(class(0.5), SummabilityClass::L43);
        assert_eq!(class(0.3), SummabilityClass::L43);
        assert_eq!(class(0.6), SummabilityClass::L43);
        assert_eq!(class(0.625), SummabilityClass::L2Only);
        assert_eq!(class(0.7), SummabilityClass::L2Only);
        assert_eq!(class(0.75), SummabilityClass::NotL2);
        assert_eq!(class(0.8), SummabilityClass::NotL2);
        assert_eq!(
            CorrelationKernel::<f64>::delta().asymptotic_class(),
            SummabilityClass::L43
        );
    }

    #[test]
    fn delta_sums() {
        let sums = kernel_sums(&CorrelationKernel::<f64>::delta(), 10);
        assert_eq!(sums.sum_abs_43, 1.0);
        assert_eq!(sums.sum_weighted_sq, 1.0);
        assert_eq!(sums.sum_tail_sq, 0.0);
        assert_eq!(sums.l2_norm_sq, 1.0);
        assert_eq!(sums.sum_k_sq, 0.0);
    }

    #[test]
    fn weighted_sum_matches_double_sum() {
        let s = CorrelationKernel::<f64>::fgn(0.7).unwrap();
        let d = 4;
        let mut brute = 0.0;
        for k in 1..=d {
            for l in 1..=d {
                let v = eval_fgn(0.7, k - l).unwrap();
                brute += v * v;
            }
        }
        brute /= d as f64;
        assert_relative_eq!(kernel_sums(&s, d as usize).sum_weighted_sq, brute, max_relative = 1e-14);
    }

    #[test]
    fn long_memory_not_square_summable() {
        let sums = kernel_sums(&CorrelationKernel::<f64>::fgn(0.8).unwrap(), 16);
        assert!(!sums.square_summable);
        assert!(sums.l2_norm_sq.is_infinite());
        assert!(sums.sum_weighted_sq.is_finite());
    }

    #[test]
    fn tail_for_fgn_is_consistent_with_l2_norm() {
        let s = CorrelationKernel::<f64>::fgn(0.3).unwrap();
        let a = kernel_sums(&s, 10);
        let b = kernel_sums(&s, 40);
        assert!(a.tail_correction > 0.0 && a.tail_correction < 1e-9);
        assert_relative_eq!(a.l2_norm_sq, b.l2_norm_sq, max_relative = 1e-12);
        assert!(b.sum_tail_sq < a.sum_tail_sq);
    }

    #[test]
    fn tables() {
        let ok = CorrelationKernel::<f64>::tabulated(vec![1.0, 0.4, 0.1]).unwrap();
        assert_eq!(ok.eval(-2), 0.1);
        assert_eq!(ok.eval(3), 0.0);
        let sums = kernel_sums(&ok, 1);
        assert_relative_eq!(sums.sum_tail_sq, 0.02, max_relative = 1e-12);
        assert!(matches!(
            CorrelationKernel::<f64>::tabulated(vec![0.9, 0.1]),
            Err(Error::TableOrigin(_))
        ));
        // 1 + 2*0.9*cos(w) dips to -0.8 at w = pi
        assert!(matches!(
            CorrelationKernel::<f64>::tabulated(vec![1.0, 0.9]),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("delta".parse::<KernelSpec>().unwrap(), KernelSpec::Delta);
        assert_eq!("fgn:0.7".parse::<KernelSpec>().unwrap(), KernelSpec::Fgn { hurst: 0.7 });
        assert_eq!(
            r#"{"kind":"fgn","H":0.7}"#.parse::<KernelSpec>().unwrap(),
            KernelSpec::Fgn { hurst: 0.7 }
        );
        assert_eq!(
            r#"{"kind":"table","values":[1.0,0.25]}"#.parse::<KernelSpec>().unwrap(),
            KernelSpec::Table {
                values: vec![1.0, 0.25]
            }
        );
        assert_eq!(
            serde_json::to_string(&KernelSpec::Fgn { hurst: 0.7 }).unwrap(),
            r#"{"kind":"fgn","H":0.7}"#
        );
        assert!("gauss:1".parse::<KernelSpec>().is_err());
    }
}
