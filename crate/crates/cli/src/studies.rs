//! Sampling and the Monte Carlo verification studies.

use std::fs::File;
use std::io::BufWriter;

use ndarray::Array2;
use serde_json::{json, Value};
use wlab::chaos::{finite_d_inner_product, rosenblatt_coupling_mse, rosenblatt_inner_product_limit};
use wlab::distances::{
    coordinate_cumulants, empirical_wasserstein2, energy_distance, energy_distance_bootstrap_se, half_vectorize_values,
    SampleCloud, MAX_ASSIGNMENT_POINTS, MIN_DIAGNOSTIC_POINTS,
};
use wlab::dump::write_matrix;
use wlab::ensembles::{
    build_rosenblatt_discrete, build_scaled_wishart, build_shifted_wishart, build_wishart, increasing_tuples,
    p_tensor_values, rosenblatt_values, shifted_wishart_values, wishart_values, EnsembleKind, EnsembleMatrix,
    EnsembleParams, GaussianTarget, GaussianTargetSampler, Resolution,
};
use wlab::kernels::KernelKind;
use wlab::montecarlo::{fit_log2_slope, mean_se, product_moment, run_replicates};
use wlab::sampler::{NestedFgnSampler, SeparableSampler};
use wlab::{Ensemble, Kernel, KernelSpec};

use crate::args::{
    DecayArgs, EnsembleChoice, Estimator, Profile, ResolutionChoice, RosenblattArgs, SampleArgs, TargetChoice,
    TensorArgs, VerifyCovarianceArgs,
};
use crate::report::{Plot, Report};
use crate::CliError;

/// Run-wide settings shared by every study.
#[derive(Clone, Copy, Debug)]
pub struct Ctx {
    pub seed: u64,
    pub threads: Option<usize>,
    pub threshold: f64,
    pub profile: Profile,
}

impl Ctx {
    fn pick<T>(&self, quick: T, full: T) -> T {
        match self.profile {
            Profile::Quick => quick,
            Profile::Full => full,
        }
    }
}

fn row_kernel(spec: &Option<KernelSpec>) -> Result<Kernel, CliError> {
    Ok(spec
        .as_ref()
        .map(Kernel::from_spec)
        .transpose()?
        .unwrap_or_else(Kernel::delta))
}

fn need(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(msg.into()))
    }
}

fn hurst_of(s: &Kernel) -> Option<f64> {
    match s.kind() {
        KernelKind::Delta => Some(0.5),
        KernelKind::FractionalGaussianNoise { hurst } => Some(*hurst),
        _ => None,
    }
}

/// 1-based `a-b-c` label of an index tuple.
fn tuple_label(t: &[usize]) -> String {
    t.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join("-")
}

/// Realizations plus the Gaussian input that generated each one.
pub struct Samples {
    pub matrices: Vec<Ensemble>,
    pub inputs: Vec<Array2<f64>>,
}

pub fn sample(args: &SampleArgs, ctx: &Ctx) -> Result<Samples, CliError> {
    need(args.n > 0 && args.d > 0, "--n and --d must be positive")?;
    need(args.count > 0, "--count must be positive")?;
    let hurst = args.hurst.or(match args.kernel {
        KernelSpec::Fgn { hurst } => Some(hurst),
        _ => None,
    });
    let s = Kernel::from_spec(&args.kernel)?;
    let r = row_kernel(&args.row_kernel)?;
    let resolution = match args.resolution {
        ResolutionChoice::Fine => Resolution::Fine,
        ResolutionChoice::Coarse => Resolution::Coarse,
    };
    let (n, d, seed) = (args.n, args.d, ctx.seed);
    let pairs: Vec<(Ensemble, Array2<f64>)> = match args.ensemble {
        EnsembleChoice::Wishart | EnsembleChoice::ShiftedWishart | EnsembleChoice::ScaledWishart => {
            let scaled = args.ensemble == EnsembleChoice::ScaledWishart;
            let h = if scaled {
                Some(hurst.ok_or_else(|| CliError::Usage("scaled-wishart needs --H or an fGn kernel".into()))?)
            } else {
                None
            };
            let s = match h {
                Some(h) => Kernel::fgn(h)?,
                None => s,
            };
            let sampler = SeparableSampler::new(&r, &s, n, d)?;
            let shifted = args.ensemble == EnsembleChoice::ShiftedWishart;
            let out = run_replicates(args.count, seed, ctx.threads, |_, rng| {
                let x = sampler.sample_with_rng(rng, seed);
                let m = match h {
                    Some(h) => build_scaled_wishart(&x, h),
                    None if shifted => Ok(build_shifted_wishart(&x, &r)),
                    None => Ok(build_wishart(&x)),
                };
                m.map(|m| (m, x.entries))
            })?;
            out.into_iter().collect::<wlab::Result<_>>()?
        }
        EnsembleChoice::Rosenblatt => {
            let h = hurst.ok_or_else(|| CliError::Usage("rosenblatt needs --H".into()))?;
            let sampler = NestedFgnSampler::new(h, n, d)?;
            run_replicates(args.count, seed, ctx.threads, |_, rng| {
                let path = sampler.sample_with_rng(rng, seed);
                (build_rosenblatt_discrete(&path, resolution), path.fine_increments)
            })?
        }
        EnsembleChoice::GaussianG | EnsembleChoice::GoeZ => {
            let (target, kind) = if args.ensemble == EnsembleChoice::GaussianG {
                (GaussianTarget::MatchedG, EnsembleKind::GaussianTargetG)
            } else {
                (GaussianTarget::GoeZ, EnsembleKind::GoeTargetZ)
            };
            let rk = args.row_kernel.as_ref().map(|_| &r);
            let sampler = GaussianTargetSampler::new(target, &s, rk, n, d)?;
            let params = EnsembleParams {
                d,
                col_kernel: Some(args.kernel.clone()),
                row_kernel: args.row_kernel.clone(),
                ..Default::default()
            };
            run_replicates(args.count, seed, ctx.threads, |_, rng| {
                let values = sampler.sample_values(rng);
                let m = EnsembleMatrix {
                    kind,
                    n,
                    values: values.clone(),
                    params: params.clone(),
                    seed,
                };
                (m, values)
            })?
        }
    };
    let (matrices, inputs) = pairs.into_iter().unzip();
    let samples = Samples { matrices, inputs };
    if let Some(path) = &args.dump {
        let mut w = BufWriter::new(File::create(path)?);
        // one record per realization, in stream order
        for x in &samples.inputs {
            write_matrix(&mut w, x, seed)?;
        }
    }
    Ok(samples)
}

pub fn verify_covariance(args: &VerifyCovarianceArgs, ctx: &Ctx) -> Result<Report, CliError> {
    need(args.n > 0 && args.d > 0, "--n and --d must be positive")?;
    let m = args.replicates.unwrap_or(ctx.pick(2_000, 20_000));
    need(m >= 2, "--replicates must be at least 2")?;
    let s = Kernel::from_spec(&args.kernel)?;
    let r = row_kernel(&args.row_kernel)?;
    let (n, d) = (args.n, args.d);
    let sampler = SeparableSampler::new(&r, &s, n, d)?;
    let samples = run_replicates(m, ctx.seed, ctx.threads, |_, rng| sampler.sample_entries(rng))?;

    let mut report = Report::new(&["anchor_i", "anchor_j", "i", "j", "estimate", "stderr", "target", "z"]);
    let mut worst: f64 = 0.0;
    for (ai, aj) in [(0, 0), (n / 2, d / 2)] {
        let x: Vec<f64> = samples.iter().map(|e| e[[ai, aj]]).collect();
        for i in 0..n {
            for j in 0..d {
                let y: Vec<f64> = samples.iter().map(|e| e[[i, j]]).collect();
                let target = r.eval(ai as i64 - i as i64) * s.eval(aj as i64 - j as i64);
                let est = product_moment(&x, &y);
                let z = est.z_score(target);
                worst = worst.max(z);
                report.push(vec![
                    json!(ai + 1),
                    json!(aj + 1),
                    json!(i + 1),
                    json!(j + 1),
                    json!(est.mean),
                    json!(est.se),
                    json!(target),
                    json!(z),
                ]);
            }
        }
    }
    let flags = sampler.flags();
    report.note("replicates", m);
    report.note("max_z", worst);
    report.note("sampler_exact", flags.is_exact());
    report.check(
        "covariance",
        worst <= ctx.threshold,
        format!(
            "{} entries, max |z| = {worst:.3} (<= {})",
            report.rows.len(),
            ctx.threshold
        ),
    );
    Ok(report)
}

fn half_cloud(values: &[Array2<f64>], label: &str) -> Result<SampleCloud, CliError> {
    let dim = values[0].nrows() * (values[0].nrows() + 1) / 2;
    let mut points = Array2::zeros((values.len(), dim));
    for (mut row, v) in points.rows_mut().into_iter().zip(values) {
        row.assign(&half_vectorize_values(v));
    }
    Ok(SampleCloud::new(points, label)?)
}

pub fn decay(args: &DecayArgs, ctx: &Ctx) -> Result<Report, CliError> {
    let grid = args
        .d
        .as_ref()
        .map(|c| c.0.clone())
        .unwrap_or_else(|| ctx.pick(vec![32, 64, 128, 256], vec![1 << 7, 1 << 9, 1 << 11, 1 << 13]));
    need(grid.len() >= 4, "the slope fit needs at least 4 values of --d")?;
    need(
        grid.iter().all(|&d| d > 0) && args.n > 0,
        "--n and --d must be positive",
    )?;
    let m = args.replicates.unwrap_or(ctx.pick(128, 512));
    need(m >= 2, "--replicates must be at least 2")?;
    if args.estimator == Estimator::W2 && m > MAX_ASSIGNMENT_POINTS {
        return Err(CliError::Usage(format!(
            "the W2 estimator is capped at {MAX_ASSIGNMENT_POINTS} points; use --estimator energy"
        )));
    }
    need(
        args.estimator == Estimator::W2 || args.bootstrap >= 2,
        "--bootstrap must be at least 2",
    )?;
    let s = Kernel::from_spec(&args.kernel)?;
    let r = args.row_kernel.as_ref().map(Kernel::from_spec).transpose()?;
    let target = match args.target {
        TargetChoice::MatchedG => GaussianTarget::MatchedG,
        TargetChoice::GoeZ => GaussianTarget::GoeZ,
    };
    let estimator = match args.estimator {
        Estimator::W2 => "w2",
        Estimator::Energy => "energy",
    };
    let hurst = hurst_of(&s);
    let n = args.n;

    let mut report = Report::new(&["n", "d", "H", "estimator", "m", "value", "stderr", "seed"]);
    let mut values = Vec::new();
    for (idx, &d) in grid.iter().enumerate() {
        let seed = ctx.seed.wrapping_add(2 * idx as u64);
        let sampler = SeparableSampler::new(r.as_ref().unwrap_or(&Kernel::delta()), &s, n, d)?;
        let gauss = GaussianTargetSampler::new(target, &s, r.as_ref(), n, d)?;
        let w = run_replicates(m, seed, ctx.threads, |_, rng| {
            let x = sampler.sample_entries(rng);
            match &r {
                Some(r) => shifted_wishart_values(x.view(), r),
                None => wishart_values(x.view()),
            }
        })?;
        let g = run_replicates(m, seed.wrapping_add(1), ctx.threads, |_, rng| gauss.sample_values(rng))?;
        let (a, b) = (half_cloud(&w, "ensemble")?, half_cloud(&g, "target")?);
        let (value, stderr) = match args.estimator {
            Estimator::W2 => (empirical_wasserstein2(&a, &b)?, None),
            Estimator::Energy => (
                energy_distance(&a, &b)?,
                Some(energy_distance_bootstrap_se(&a, &b, args.bootstrap, seed)?),
            ),
        };
        values.push(value);
        report.push(vec![
            json!(n),
            json!(d),
            json!(hurst),
            json!(estimator),
            json!(m),
            json!(value),
            json!(stderr),
            json!(seed),
        ]);
    }
    let monotone = values.windows(2).all(|w| w[1] < w[0]);
    report.note("monotone", monotone);
    let xs: Vec<f64> = grid.iter().map(|&d| d as f64).collect();
    let fit = fit_log2_slope(&xs, &values).ok();
    match &fit {
        Some(f) => {
            report.note("slope", f.slope);
            report.note("slope_se", f.slope_se);
            report.note("intercept", f.intercept);
            report.note("residuals", json!(f.residuals));
        }
        None => report.note("slope", Value::Null),
    }
    if let Some(max) = args.max_slope {
        report.check("monotone", monotone, "distance decreases along the d grid");
        let slope = fit.as_ref().map(|f| f.slope);
        report.check(
            "slope",
            slope.is_some_and(|v| v <= max),
            format!(
                "fitted log2 slope {} (<= {max})",
                slope.map_or("undefined".into(), |v| format!("{v:.4}"))
            ),
        );
    }
    report.plot = Some(Plot {
        x: "d",
        y: "value",
        series: None,
        log2: true,
    });
    Ok(report)
}

pub fn rosenblatt(args: &RosenblattArgs, ctx: &Ctx) -> Result<Report, CliError> {
    let h = args.hurst;
    let grid = args
        .d
        .as_ref()
        .map(|c| c.0.clone())
        .unwrap_or_else(|| ctx.pick(vec![64, 128, 256, 512], (8..=12).map(|k| 1usize << k).collect()));
    need(grid.len() >= 2, "the slope fit needs at least 2 values of --d")?;
    let m = args.replicates.unwrap_or(ctx.pick(1_000, 4_000));
    need(m >= 2, "--replicates must be at least 2")?;
    let var_limit = 2.0 * rosenblatt_inner_product_limit(h, true)?;

    let mut report = Report::new(&[
        "d",
        "mse",
        "mse_se",
        "mse_exact",
        "mse_z",
        "var",
        "var_se",
        "var_exact",
        "var_z",
    ]);
    let (mut mses, mut exact, mut worst_mse, mut worst_var) = (Vec::new(), Vec::new(), 0.0f64, 0.0f64);
    for (idx, &d) in grid.iter().enumerate() {
        let sampler = NestedFgnSampler::new(h, 1, d)?;
        let pairs = run_replicates(m, ctx.seed.wrapping_add(idx as u64), ctx.threads, |i, rng| {
            let path = sampler.sample_with_rng(rng, i as u64);
            let coarse = rosenblatt_values(&path, Resolution::Coarse)[[0, 0]];
            let fine = rosenblatt_values(&path, Resolution::Fine)[[0, 0]];
            ((coarse - fine).powi(2), coarse * coarse)
        })?;
        let (sq_diff, sq): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (mse, var) = (mean_se(&sq_diff), mean_se(&sq));
        let mse_exact = rosenblatt_coupling_mse(h, d, true)?;
        let var_exact = 2.0 * finite_d_inner_product(h, d, d, true)?;
        let (zm, zv) = (mse.z_score(mse_exact), var.z_score(var_exact));
        worst_mse = worst_mse.max(zm);
        worst_var = worst_var.max(zv);
        mses.push(mse.mean);
        exact.push(mse_exact);
        report.push(vec![
            json!(d),
            json!(mse.mean),
            json!(mse.se),
            json!(mse_exact),
            json!(zm),
            json!(var.mean),
            json!(var.se),
            json!(var_exact),
            json!(zv),
        ]);
    }
    let xs: Vec<f64> = grid.iter().map(|&d| d as f64).collect();
    let fit = fit_log2_slope(&xs, &mses)?;
    let exact_slope = fit_log2_slope(&xs, &exact)?.slope;
    let expected = 3.0 - 4.0 * h;
    report.note("replicates", m);
    report.note("slope", fit.slope);
    report.note("slope_se", fit.slope_se);
    report.note("expected_slope", expected);
    report.note("exact_finite_d_slope", exact_slope);
    report.note("var_limit", var_limit);
    report.check(
        "slope",
        (fit.slope - expected).abs() <= args.slope_tol,
        format!(
            "fitted log2 slope {:.4} vs 3-4H = {expected:.4} (+- {})",
            fit.slope, args.slope_tol
        ),
    );
    report.check(
        "coupling_mse",
        worst_mse <= ctx.threshold,
        format!(
            "max |z| against the exact finite-d MSE {worst_mse:.3} (<= {})",
            ctx.threshold
        ),
    );
    report.check(
        "variance",
        worst_var <= ctx.threshold,
        format!(
            "max |z| against the exact finite-d variance {worst_var:.3} (<= {})",
            ctx.threshold
        ),
    );
    report.plot = Some(Plot {
        x: "d",
        y: "mse",
        series: None,
        log2: true,
    });
    Ok(report)
}

pub fn tensor(args: &TensorArgs, ctx: &Ctx) -> Result<Report, CliError> {
    let (p, n) = (args.p, args.n);
    need(p >= 2 && p <= n, "tensor order must satisfy 2 <= p <= n")?;
    let grid = args
        .d
        .as_ref()
        .map(|c| c.0.clone())
        .unwrap_or_else(|| ctx.pick(vec![1000], vec![1000, 10_000]));
    need(!grid.is_empty() && grid.iter().all(|&d| d > 0), "--d must be positive")?;
    let m = args.replicates.unwrap_or(ctx.pick(2_000, 20_000));
    need(
        m >= MIN_DIAGNOSTIC_POINTS,
        &format!("cumulant estimates need --replicates >= {MIN_DIAGNOSTIC_POINTS}"),
    )?;
    let tuples = increasing_tuples(n, p);
    let kappa_unit = 3f64.powi(p as i32) - 3.0;

    let mut report = Report::new(&[
        "d",
        "statistic",
        "tuple_a",
        "tuple_b",
        "estimate",
        "stderr",
        "target",
        "z",
    ]);
    let (mut worst_cov, mut worst_k4) = (0.0f64, 0.0f64);
    for (idx, &d) in grid.iter().enumerate() {
        let sampler = SeparableSampler::row_independent(&Kernel::delta(), n, d)?;
        let ys = run_replicates(m, ctx.seed.wrapping_add(idx as u64), ctx.threads, |_, rng| {
            p_tensor_values(sampler.sample_entries(rng).view(), &tuples)
        })?;
        let cols: Vec<Vec<f64>> = (0..tuples.len()).map(|t| ys.iter().map(|y| y[t]).collect()).collect();
        for a in 0..cols.len() {
            for b in a..cols.len() {
                let target = if a == b { 1.0 } else { 0.0 };
                let est = product_moment(&cols[a], &cols[b]);
                let z = est.z_score(target);
                worst_cov = worst_cov.max(z);
                report.push(vec![
                    json!(d),
                    json!("cov"),
                    json!(tuple_label(&tuples[a])),
                    json!(tuple_label(&tuples[b])),
                    json!(est.mean),
                    json!(est.se),
                    json!(target),
                    json!(z),
                ]);
            }
        }
        // Y_j is d^{-1/2} times a sum of d i.i.d. products of p normals, each with kappa_4 = 3^p - 3
        let target = kappa_unit / d as f64;
        for (t, col) in tuples.iter().zip(&cols) {
            let c = coordinate_cumulants(col)?;
            let z = (c.estimate.k4 - target).abs() / c.stderr.k4;
            worst_k4 = worst_k4.max(z);
            report.push(vec![
                json!(d),
                json!("kappa4"),
                json!(tuple_label(t)),
                Value::Null,
                json!(c.estimate.k4),
                json!(c.stderr.k4),
                json!(target),
                json!(z),
            ]);
        }
    }
    report.note("replicates", m);
    report.note("tuples", tuples.len());
    report.note("kappa4_times_d", kappa_unit);
    report.check(
        "orthonormality",
        worst_cov <= ctx.threshold,
        format!(
            "max |z| over Var(Y_j) = 1, Cov(Y_j, Y_j') = 0: {worst_cov:.3} (<= {})",
            ctx.threshold
        ),
    );
    report.check(
        "kappa4",
        worst_k4 <= ctx.threshold,
        format!(
            "max |z| against kappa4 = {kappa_unit}/d: {worst_k4:.3} (<= {})",
            ctx.threshold
        ),
    );
    Ok(report)
}
