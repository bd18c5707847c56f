//! Closed-form bound and rate calculators.
//!
//! Bounds with explicit constants are reported as [`RateKind::UpperBound`];
//! `O(·)` statements are reported with constant 1 as
//! [`RateKind::RateNoConstant`], so no invented constant is ever presented
//! as a proven one.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{param, Error, Result};
use crate::kernels::{kernel_sums, CorrelationKernel, KernelKind, KernelSpec, SummabilityClass};
use crate::Scalar;

/// Tolerance for placing `H` exactly on a regime boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Phase of the fractional-noise Gaussian approximation, indexed by `H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RegimeCase {
    /// `0 < H < 1/2`
    #[serde(rename = "i")]
    I,
    /// `H = 1/2`
    #[serde(rename = "ii")]
    II,
    /// `1/2 < H < 5/8`
    #[serde(rename = "iii")]
    III,
    /// `H = 5/8`
    #[serde(rename = "iv")]
    IV,
    /// `5/8 < H < 3/4`
    #[serde(rename = "v")]
    V,
    /// `H = 3/4`
    #[serde(rename = "vi")]
    VI,
    /// `3/4 < H < 1`: non-central (Rosenblatt) limit
    #[serde(rename = "rosenblatt")]
    Rosenblatt,
}

impl RegimeCase {
    pub fn label(self) -> &'static str {
        match self {
            Self::I => "(i)",
            Self::II => "(ii)",
            Self::III => "(iii)",
            Self::IV => "(iv)",
            Self::V => "(v)",
            Self::VI => "(vi)",
            Self::Rosenblatt => "H>3/4",
        }
    }

    pub fn of_hurst(hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(param("H", format!("must lie in (0, 1), got {hurst}")));
        }
        let near = |x: f64| (hurst - x).abs() <= BOUNDARY_TOL;
        Ok(if near(0.5) {
            Self::II
        } else if near(0.625) {
            Self::IV
        } else if near(0.75) {
            Self::VI
        } else if hurst < 0.5 {
            Self::I
        } else if hurst < 0.625 {
            Self::III
        } else if hurst < 0.75 {
            Self::V
        } else {
            Self::Rosenblatt
        })
    }
}

impl fmt::Display for RegimeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Distance scale between `G` and `Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psi {
    Rate(f64),
    /// `G` and `Z` have the same law (white noise).
    SameLaw,
    /// `Z` is not defined (`s` not square summable).
    Undefined,
}

impl Psi {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Rate(v) => Some(v),
            Self::SameLaw => Some(0.0),
            Self::Undefined => None,
        }
    }
}

impl Serialize for Psi {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Rate(v) => ser.serialize_f64(*v),
            Self::SameLaw => ser.serialize_str("same_law"),
            Self::Undefined => ser.serialize_none(),
        }
    }
}

impl fmt::Display for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rate(v) => write!(f, "{v:.6e}"),
            Self::SameLaw => f.write_str("same law"),
            Self::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regime {
    pub hurst: f64,
    pub case: RegimeCase,
    pub phi: f64,
    pub psi: Psi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Proven inequality with its explicit constant.
    UpperBound,
    /// `O(·)` statement evaluated with constant 1.
    RateNoConstant,
}

impl fmt::Display for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::UpperBound => "upper bound",
            Self::RateNoConstant => "rate (no constant)",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateTag {
    pub name: String,
    pub value: f64,
    pub kind: RateKind,
}

impl RateTag {
    fn bound(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            kind: RateKind::UpperBound,
        }
    }

    fn rate(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            kind: RateKind::RateNoConstant,
        }
    }
}

/// Summability assumption on the row correlation `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowCorrelationCase {
    General,
    SquareSummable,
    Summable,
}

impl RowCorrelationCase {
    fn suffix(self) -> &'static str {
        match self {
            Self::General => "general",
            Self::SquareSummable => "r_l2",
            Self::Summable => "r_l1",
        }
    }

    pub fn of_kernel<T: Scalar>(r: &CorrelationKernel<T>) -> Self {
        if r.is_summable() {
            Self::Summable
        } else if r.asymptotic_class() != SummabilityClass::NotL2 {
            Self::SquareSummable
        } else {
            Self::General
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub d: usize,
    pub col_kernel: KernelSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_kernel: Option<KernelSpec>,
    /// `sum_{|k|<=d} |s(k)|^{4/3}`
    pub k_43: f64,
    /// `sum_{|k|<=d} (1-|k|/d) s(k)^2`
    pub weighted_sq: f64,
    pub bound_cl1: f64,
    /// `None` when `s` is not square summable.
    pub bound_cl2: Option<f64>,
    /// `None` for kernels outside the fractional family.
    pub regime: Option<Regime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_case: Option<RowCorrelationCase>,
    pub rate_tags: Vec<RateTag>,
}

impl BoundReport {
    pub fn tag(&self, name: &str) -> Option<&RateTag> {
        self.rate_tags.iter().find(|t| t.name == name)
    }
}

fn regime_hurst<T: Scalar>(s: &CorrelationKernel<T>) -> Option<f64> {
    match s.kind() {
        KernelKind::Delta => Some(0.5),
        KernelKind::FractionalGaussianNoise { hurst } => Some(hurst.to_f64_lossy()),
        KernelKind::Tabulated { .. } => None,
    }
}

fn check_dims(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        Err(param("n, d", "must be positive"))
    } else {
        Ok(())
    }
}

/// Gaussian-approximation bounds for row-independent `X`:
/// `cl1 = sqrt(192 n^3 K^3 / (V d))` with `K = sum|s|^{4/3}`, `V` the
/// weighted square sum, and `cl2 = 2 sqrt(n(n+1)) / ||s|| (tail + (1/d) sum |k| s^2)`.
pub fn theorem1_bounds<T: Scalar>(s: &CorrelationKernel<T>, n: usize, d: usize) -> Result<BoundReport> {
    check_dims(n, d)?;
    let sums = kernel_sums(s, d);
    let k = sums.sum_abs_43.to_f64_lossy();
    let v = sums.sum_weighted_sq.to_f64_lossy();
    let (nf, df) = (n as f64, d as f64);
    let k3 = k * k * k;
    let bound_cl1 = ((192.0 * nf.powi(3) * k3) / (v * df)).sqrt();
    let bound_cl2 = sums.square_summable.then(|| {
        let l2 = sums.l2_norm_sq.to_f64_lossy();
        let tail = sums.sum_tail_sq.to_f64_lossy() + sums.sum_k_sq.to_f64_lossy();
        2.0 * (nf * (nf + 1.0)).sqrt() / l2.sqrt() * tail
    });
    let regime = regime_hurst(s).map(|h| regime_classifier(h, n, d)).transpose()?;

    let mut rate_tags = vec![
        RateTag::bound("cl1", bound_cl1),
        RateTag::bound("cl1_unweighted", ((192.0 * nf.powi(3) * k3) / df).sqrt()),
    ];
    if let Some(cl2) = bound_cl2 {
        rate_tags.push(RateTag::bound("cl2", cl2));
    }
    if let Some(r) = regime {
        rate_tags.push(RateTag::rate("phi", r.phi));
        if let Some(psi) = r.psi.value() {
            rate_tags.push(RateTag::rate("psi", psi));
        }
        if r.case == RegimeCase::Rosenblatt {
            rate_tags.push(RateTag::rate("rosenblatt_wass", rosenblatt_rate(r.hurst, n, d)?));
        }
    }
    Ok(BoundReport {
        n,
        d,
        col_kernel: s.spec(),
        row_kernel: None,
        k_43: k,
        weighted_sq: v,
        bound_cl1,
        bound_cl2,
        regime,
        row_case: None,
        rate_tags,
    })
}

/// Regime label with `phi` (W vs G, or scaled W vs the Rosenblatt matrix)
/// and `psi` (G vs Z). Logarithms are natural.
pub fn regime_classifier(hurst: f64, n: usize, d: usize) -> Result<Regime> {
    check_dims(n, d)?;
    let case = RegimeCase::of_hurst(hurst)?;
    let (nf, df) = (n as f64, d as f64);
    let n3 = nf.powi(3);
    let fractional_psi = Psi::Rate(nf * df.powf(4.0 * hurst - 3.0));
    let (phi, psi) = match case {
        RegimeCase::I => (n3 / df, Psi::Rate(nf / df)),
        RegimeCase::II => (n3 / df, Psi::SameLaw),
        RegimeCase::III => (n3 / df, fractional_psi),
        RegimeCase::IV => (n3 * df.ln().powi(3) / df, Psi::Rate(nf / df.sqrt())),
        RegimeCase::V => (n3 * df.powf(8.0 * hurst - 6.0), fractional_psi),
        RegimeCase::VI => (n3 / df.ln(), Psi::Undefined),
        RegimeCase::Rosenblatt => (nf * nf * df.powf(3.0 - 4.0 * hurst), Psi::Undefined),
    };
    Ok(Regime { hurst, case, phi, psi })
}

/// `n d^{(3-4H)/2}`: distance rate between the scaled Wishart matrix and its
/// Rosenblatt-Wishart limit (constant unknown).
pub fn rosenblatt_rate(hurst: f64, n: usize, d: usize) -> Result<f64> {
    if !(hurst > 0.75 && hurst < 1.0) {
        return Err(param("H", format!("needs 3/4 < H < 1, got {hurst}")));
    }
    Ok(n as f64 * (d as f64).powf((3.0 - 4.0 * hurst) / 2.0))
}

/// `d_Wass <= 2 sqrt(2) m^{1/4} sqrt(d_2)` for vectors in `R^m`.
pub fn smoothing_bound(m: usize, d2: f64) -> f64 {
    2.0 * 2f64.sqrt() * (m as f64).powf(0.25) * d2.sqrt()
}

/// Rates for `W̃` against `G^{(r,s)}` when rows are correlated through `r`.
///
/// Emits `d2_*`/`d2tilde_*` for all three assumptions on `r`, the matching
/// Wasserstein rates `wass_*`, and `wass_composed_*` which is the smoothing
/// inequality applied to `d2_*` on the half-vector (`m = n(n+1)/2`) followed
/// by the `sqrt(2)` half-vector bridge. `row_case` records the sharpest
/// assumption `r` satisfies.
pub fn overall_correlation_rates<T: Scalar>(
    s: &CorrelationKernel<T>,
    r: &CorrelationKernel<T>,
    n: usize,
    d: usize,
) -> Result<BoundReport> {
    check_dims(n, d)?;
    let sums = kernel_sums(s, d);
    if !sums.square_summable {
        return Err(Error::NotSquareSummable);
    }
    let k = sums.sum_abs_43.to_f64_lossy();
    let (nf, df) = (n as f64, d as f64);
    let m = n * (n + 1) / 2;
    let k32 = k.powf(1.5) / df.sqrt();
    let k34 = k.powf(0.75) / df.powf(0.25);

    let table = [
        (RowCorrelationCase::General, 4.0, 3.0, 2.5),
        (RowCorrelationCase::SquareSummable, 3.5, 2.5, 2.25),
        (RowCorrelationCase::Summable, 3.0, 2.5, 2.0),
    ];
    let mut rate_tags = Vec::new();
    for (case, e_d2, e_tilde, e_wass) in table {
        let sfx = case.suffix();
        let d2 = nf.powf(e_d2) * k32;
        rate_tags.push(RateTag::rate(&format!("d2_{sfx}"), d2));
        rate_tags.push(RateTag::rate(&format!("d2tilde_{sfx}"), nf.powf(e_tilde) * k32));
        rate_tags.push(RateTag::rate(&format!("wass_{sfx}"), nf.powf(e_wass) * k34));
        rate_tags.push(RateTag::rate(
            &format!("wass_composed_{sfx}"),
            2f64.sqrt() * smoothing_bound(m, d2),
        ));
    }
    let row_case = RowCorrelationCase::of_kernel(r);
    let sfx = row_case.suffix();
    for name in ["d2", "d2tilde", "wass", "wass_composed"] {
        let v = rate_tags
            .iter()
            .find(|t| t.name == format!("{name}_{sfx}"))
            .map(|t| t.value)
            .expect("case emitted");
        rate_tags.push(RateTag::rate(&format!("{name}_selected"), v));
    }

    Ok(BoundReport {
        n,
        d,
        col_kernel: s.spec(),
        row_kernel: Some(r.spec()),
        k_43: k,
        weighted_sq: sums.sum_weighted_sq.to_f64_lossy(),
        bound_cl1: theorem1_bounds(s, n, d)?.bound_cl1,
        bound_cl2: None,
        regime: None,
        row_case: Some(row_case),
        rate_tags,
    })
}

/// `sqrt(n^{2p-1}/d)`: Gaussian-approximation rate of the off-diagonal
/// `p`-tensor.
pub fn tensor_rate(p: usize, n: usize, d: usize) -> Result<f64> {
    check_dims(n, d)?;
    if p < 2 {
        return Err(param("p", format!("must be at least 2, got {p}")));
    }
    if p > n {
        return Err(param("p", format!("{p} exceeds n = {n}")));
    }
    Ok(((n as f64).powi(2 * p as i32 - 1) / d as f64).sqrt())
}

/// `(1/d) (sum_{|k|<=d} |s(k)|^{4/3})^3`, the kernel-dependent factor of `cl1`.
pub fn cl1_kernel_factor<T: Scalar>(s: &CorrelationKernel<T>, d: usize) -> f64 {
    let four_thirds = 4.0 / 3.0;
    let k: f64 = 1.0
        + 2.0
            * (1..=d as i64)
                .rev()
                .map(|k| s.eval(k).to_f64_lossy().abs().powf(four_thirds))
                .sum::<f64>();
    k * k * k / d as f64
}
