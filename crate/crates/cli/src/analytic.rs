//! Subcommands that evaluate closed forms: no sampling involved.

use serde_json::{json, Value};
use wlab::bounds::{overall_correlation_rates, regime_classifier, theorem1_bounds};
use wlab::chaos::{contraction_norm_sq_row_independent, overall_contraction_report, ContractionCase};
use wlab::kernels::kernel_sums;
use wlab::Kernel;

use crate::args::{BoundsArgs, ContractionArgs, KernelArgs, RegimeArgs};
use crate::report::{Plot, Report};
use crate::CliError;

fn to_value<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

pub fn kernel(args: &KernelArgs) -> Result<Report, CliError> {
    let s = Kernel::from_spec(&args.kernel)?;
    let mut report = Report::new(&["quantity", "arg", "value"]);
    let lags: Vec<i64> = if args.lags.is_empty() && args.d.is_none() {
        (0..=8).collect()
    } else {
        args.lags.clone()
    };
    for k in lags {
        report.push(vec![json!("s"), json!(k), json!(s.eval(k))]);
    }
    for &d in args.d.iter().flat_map(|c| &c.0) {
        if d == 0 {
            return Err(CliError::Usage("--d must be positive".into()));
        }
        let sums = kernel_sums(&s, d);
        for (name, v) in [
            ("sum_abs_43", sums.sum_abs_43),
            ("sum_weighted_sq", sums.sum_weighted_sq),
            ("sum_tail_sq", sums.sum_tail_sq),
            ("tail_correction", sums.tail_correction),
            ("sum_k_sq", sums.sum_k_sq),
            ("l2_norm_sq", sums.l2_norm_sq),
        ] {
            report.push(vec![json!(name), json!(d), json!(v)]);
        }
    }
    report.note("kernel", args.kernel.to_string());
    report.note("asymptotic_class", to_value(s.asymptotic_class()));
    report.note("summable", s.is_summable());
    Ok(report)
}

pub fn bounds(args: &BoundsArgs) -> Result<Report, CliError> {
    let s = Kernel::from_spec(&args.kernel)?;
    let r = args.row_kernel.as_ref().map(Kernel::from_spec).transpose()?;
    let mut columns = vec![
        "n",
        "d",
        "k_43",
        "weighted_sq",
        "bound_cl1",
        "bound_cl2",
        "regime",
        "phi",
        "psi",
    ];
    let mut report_rows = Vec::new();
    let mut extra: Vec<String> = Vec::new();
    for &n in &args.n.0 {
        for &d in &args.d.0 {
            let b = theorem1_bounds(&s, n, d)?;
            let mut row = vec![
                json!(n),
                json!(d),
                json!(b.k_43),
                json!(b.weighted_sq),
                json!(b.bound_cl1),
                json!(b.bound_cl2),
                b.regime.map_or(Value::Null, |g| to_value(g.case)),
                b.regime.map_or(Value::Null, |g| json!(g.phi)),
                b.regime.map_or(Value::Null, |g| to_value(g.psi)),
            ];
            if let Some(r) = &r {
                let o = overall_correlation_rates(&s, r, n, d)?;
                if extra.is_empty() {
                    extra = o.rate_tags.iter().map(|t| t.name.clone()).collect();
                }
                row.push(to_value(o.row_case));
                row.extend(extra.iter().map(|name| json!(o.tag(name).map(|t| t.value))));
            }
            report_rows.push(row);
        }
    }
    if r.is_some() {
        columns.push("row_case");
    }
    let mut report = Report::new(&columns);
    report.columns.extend(extra);
    for row in report_rows {
        report.push(row);
    }
    report.note("kernel", args.kernel.to_string());
    if let Some(r) = &args.row_kernel {
        report.note("row_kernel", r.to_string());
    }
    report.plot = Some(Plot {
        x: "d",
        y: "bound_cl1",
        series: Some("n"),
        log2: true,
    });
    Ok(report)
}

pub fn regime(args: &RegimeArgs) -> Result<Report, CliError> {
    let mut report = Report::new(&["H", "n", "d", "case", "phi", "psi"]);
    for &h in &args.hurst.0 {
        for &n in &args.n.0 {
            for &d in &args.d.0 {
                let g = regime_classifier(h, n, d)?;
                report.push(vec![
                    json!(h),
                    json!(n),
                    json!(d),
                    to_value(g.case),
                    json!(g.phi),
                    to_value(g.psi),
                ]);
            }
        }
    }
    report.plot = Some(Plot {
        x: "H",
        y: "phi",
        series: Some("d"),
        log2: false,
    });
    Ok(report)
}

pub fn contraction(args: &ContractionArgs) -> Result<Report, CliError> {
    let s = Kernel::from_spec(&args.kernel)?;
    let mut report = Report::new(&[
        "d",
        "case",
        "indices",
        "norm_sq",
        "bound_rhs",
        "ratio",
        "brute_force_agrees",
    ]);
    let mut worst: f64 = 0.0;
    let mut brute_ok = true;
    let r = args.row_kernel.as_ref().map(Kernel::from_spec).transpose()?;
    let idx = match args.indices.as_slice() {
        &[i, j, p, q] if i.min(j).min(p).min(q) >= 1 => (i - 1, j - 1, p - 1, q - 1),
        _ => return Err(CliError::Usage("--indices needs four 1-based indices".into())),
    };
    for &d in &args.d.0 {
        let mut reports = Vec::new();
        for case in [
            ContractionCase::Diagonal,
            ContractionCase::OffDiagonal,
            ContractionCase::Cross,
        ] {
            reports.push(contraction_norm_sq_row_independent(&s, d, case)?);
        }
        if let Some(r) = &r {
            reports.push(overall_contraction_report(&s, r, d, idx)?);
        }
        for c in reports {
            worst = worst.max(c.ratio);
            brute_ok &= c.brute_force_agrees != Some(false);
            let ids: Vec<String> = c.indices.iter().map(|v| v.to_string()).collect();
            report.push(vec![
                json!(d),
                c.case.map_or(json!("correlated"), to_value),
                json!(ids.join(",")),
                json!(c.norm_sq),
                json!(c.bound_rhs),
                json!(c.ratio),
                json!(c.brute_force_agrees),
            ]);
        }
    }
    report.note("kernel", args.kernel.to_string());
    report.check(
        "ratio",
        worst <= 1.0 + 1e-9,
        format!("max norm/bound ratio {worst:.6} (<= 1)"),
    );
    report.check(
        "brute_force",
        brute_ok,
        "fast trace form agrees with the literal quadruple sum where checked",
    );
    report.plot = Some(Plot {
        x: "d",
        y: "norm_sq",
        series: Some("case"),
        log2: true,
    });
    Ok(report)
}
