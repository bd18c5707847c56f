//! Command-line surface and the serializable experiment config it resolves to.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use wlab::KernelSpec;

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Parser, Debug)]
#[command(
    name = "wlab",
    version,
    about = "Correlated Wishart ensembles: bounds, sampling and Monte Carlo checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Also write an SVG line plot (and a CSV of the same table next to it).
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Experiment seed. The WLAB_SEED environment variable takes precedence.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replicates (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Small replicate counts and grids (the default).
    #[arg(long, global = true, conflicts_with = "full")]
    pub quick: bool,
    /// Replicate counts and grids of the acceptance suite.
    #[arg(long, global = true)]
    pub full: bool,
    /// Pass/fail threshold in standard errors.
    #[arg(long, global = true, default_value_t = 4.0)]
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Quick,
    Full,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Kernel values s(k) and the lag sums entering the bounds.
    Kernel(KernelArgs),
    /// Closed-form bound table over an (n, d) grid.
    Bounds(BoundsArgs),
    /// Regime classification and rate phi over an (H, n, d) grid.
    Regime(RegimeArgs),
    /// Emit ensemble realizations.
    Sample(SampleArgs),
    /// Monte Carlo check of the sampler covariance r(i-i') s(j-j').
    VerifyCovariance(VerifyCovarianceArgs),
    /// Distance between the ensemble and its Gaussian target across d, with a log-log slope fit.
    Decay(DecayArgs),
    /// Nested coupling study E[(S(d) - S(2d))^2] and Var S(d) against exact values.
    Rosenblatt(RosenblattArgs),
    /// p-tensor covariance and fourth-cumulant study.
    Tensor(TensorArgs),
    /// Contraction norms against their bounds, with a brute-force cross-check.
    Contraction(ContractionArgs),
    /// Re-run the config embedded in a JSON report.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Kernel(_) => "kernel",
            Self::Bounds(_) => "bounds",
            Self::Regime(_) => "regime",
            Self::Sample(_) => "sample",
            Self::VerifyCovariance(_) => "verify-covariance",
            Self::Decay(_) => "decay",
            Self::Rosenblatt(_) => "rosenblatt",
            Self::Tensor(_) => "tensor",
            Self::Contraction(_) => "contraction",
            Self::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct KernelArgs {
    /// `delta`, `fgn:H`, `table:1,s1,s2,...` or a JSON object.
    #[arg(long, default_value = "delta", value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    /// Lags to evaluate (default 0..=8 when neither --k nor --d is given).
    #[arg(long = "k", value_delimiter = ',', allow_hyphen_values = true)]
    pub lags: Vec<i64>,
    /// Dimensions for the lag sums.
    #[arg(long)]
    pub d: Option<Counts>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// Column kernel s.
    #[arg(long, default_value = "delta", value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    /// Row kernel r; adds the overall-correlation rates.
    #[arg(long, value_parser = parse_kernel)]
    pub row_kernel: Option<KernelSpec>,
    #[arg(long, default_value = "1")]
    pub n: Counts,
    #[arg(long, default_value = "64,256,1024,4096")]
    pub d: Counts,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RegimeArgs {
    /// Values or `start:stop:step` ranges, comma separated.
    #[arg(long = "H", default_value = "0.05:0.95:0.05")]
    #[serde(rename = "H")]
    pub hurst: Reals,
    #[arg(long, default_value = "10")]
    pub n: Counts,
    #[arg(long, default_value = "100000")]
    pub d: Counts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleChoice {
    Wishart,
    ShiftedWishart,
    ScaledWishart,
    Rosenblatt,
    GaussianG,
    GoeZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResolutionChoice {
    Fine,
    Coarse,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value_t = EnsembleChoice::Wishart)]
    pub ensemble: EnsembleChoice,
    #[arg(long, default_value = "delta", value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    #[arg(long, value_parser = parse_kernel)]
    pub row_kernel: Option<KernelSpec>,
    /// Hurst index for `scaled-wishart` and `rosenblatt` (overrides an fGn --kernel).
    #[arg(long = "H")]
    #[serde(rename = "H")]
    pub hurst: Option<f64>,
    #[arg(long, default_value = "3", value_parser = parse_count)]
    pub n: usize,
    #[arg(long, default_value = "64", value_parser = parse_count)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = ResolutionChoice::Coarse)]
    pub resolution: ResolutionChoice,
    /// Number of realizations.
    #[arg(long, default_value = "1", value_parser = parse_count)]
    pub count: usize,
    /// Binary dump of the Gaussian input of each realization.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyCovarianceArgs {
    #[arg(long, default_value = "fgn:0.7", value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    #[arg(long, value_parser = parse_kernel)]
    pub row_kernel: Option<KernelSpec>,
    #[arg(long, default_value = "4", value_parser = parse_count)]
    pub n: usize,
    #[arg(long, default_value = "64", value_parser = parse_count)]
    pub d: usize,
    /// Replicates (quick 2000, full 20000).
    #[arg(long, value_parser = parse_count)]
    pub replicates: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Empirical W2 via optimal assignment (m <= 1024).
    W2,
    /// Energy-distance U-statistic with bootstrap standard error.
    Energy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetChoice {
    MatchedG,
    GoeZ,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DecayArgs {
    #[arg(long, default_value = "delta", value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    /// Row kernel r; the shifted ensemble is compared with its matched target.
    #[arg(long, value_parser = parse_kernel)]
    pub row_kernel: Option<KernelSpec>,
    #[arg(long, default_value = "3", value_parser = parse_count)]
    pub n: usize,
    /// Dimension grid, at least 4 points (quick 32..256, full 2^7..2^13).
    #[arg(long)]
    pub d: Option<Counts>,
    /// Sample pairs per grid point (quick 128, full 512).
    #[arg(long, value_parser = parse_count)]
    pub replicates: Option<usize>,
    #[arg(long, value_enum, default_value_t = Estimator::W2)]
    pub estimator: Estimator,
    #[arg(long, value_enum, default_value_t = TargetChoice::MatchedG)]
    pub target: TargetChoice,
    /// Bootstrap resamples for the energy-distance standard error.
    #[arg(long, default_value = "20", value_parser = parse_count)]
    pub bootstrap: usize,
    /// Turn the study into a check: values must decrease and the slope must not exceed this.
    #[arg(long, allow_hyphen_values = true)]
    pub max_slope: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RosenblattArgs {
    #[arg(long = "H", default_value_t = 0.8)]
    #[serde(rename = "H")]
    pub hurst: f64,
    /// Coarse dimension grid (quick 64..512, full 2^8..2^12).
    #[arg(long)]
    pub d: Option<Counts>,
    /// Replicates per grid point (quick 1000, full 4000).
    #[arg(long, value_parser = parse_count)]
    pub replicates: Option<usize>,
    /// Allowed gap between the fitted log2 slope and 3 - 4H.
    #[arg(long, default_value_t = 0.1)]
    pub slope_tol: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TensorArgs {
    #[arg(long, default_value = "3", value_parser = parse_count)]
    pub p: usize,
    #[arg(long, default_value = "5", value_parser = parse_count)]
    pub n: usize,
    /// Dimension grid (quick 1000, full 1000,10000).
    #[arg(long)]
    pub d: Option<Counts>,
    /// Replicates per grid point (quick 2000, full 20000).
    #[arg(long, value_parser = parse_count)]
    pub replicates: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ContractionArgs {
    #[arg(long, default_value = "fgn:0.7", value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    /// Row kernel r; reports the correlated-row contraction for --indices.
    #[arg(long, value_parser = parse_kernel)]
    pub row_kernel: Option<KernelSpec>,
    /// Entry pair `i,j,p,q` (1-based) for the correlated-row contraction.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [1usize, 2, 1, 2])]
    pub indices: Vec<usize>,
    #[arg(long, default_value = "8,64,512")]
    pub d: Counts,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// JSON report (or bare config) to re-run.
    pub file: PathBuf,
}

/// Everything that determines a run's output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub profile: Profile,
    pub threshold: f64,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

pub fn parse_kernel(s: &str) -> Result<KernelSpec, String> {
    let spec: KernelSpec = s.parse().map_err(|e: wlab::Error| e.to_string())?;
    wlab::Kernel::from_spec(&spec).map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Accepts `65536`, `1e5`, `2^16`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let base: u32 = base.parse().map_err(|_| format!("bad base in `{s}`"))?;
        let exp: u32 = exp.parse().map_err(|_| format!("bad exponent in `{s}`"))?;
        return base
            .checked_pow(exp)
            .map(|v| v as usize)
            .ok_or_else(|| format!("`{s}` overflows"));
    }
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}

/// Comma-separated counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Counts(pub Vec<usize>);

impl FromStr for Counts {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s.split(',').map(parse_count).collect::<Result<Vec<_>, _>>()?;
        Ok(Self(v))
    }
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Comma-separated reals; an item `a:b:h` expands to `a, a+h, ...` up to `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Reals(pub Vec<f64>);

impl FromStr for Reals {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
        let mut out = Vec::new();
        for item in s.split(',') {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [v] => out.push(num(v)?),
                [a, b, h] => {
                    let (a, b, h) = (num(a)?, num(b)?, num(h)?);
                    if h.is_nan() || h <= 0.0 || b < a {
                        return Err(format!("range `{item}` needs start <= stop and a positive step"));
                    }
                    let steps = ((b - a) / h + 1e-9).floor() as usize;
                    // rounded to 12 digits so that 0.05:0.95:0.05 hits 0.5, 0.625, ... exactly
                    out.extend((0..=steps).map(|k| ((a + k as f64 * h) * 1e12).round() / 1e12));
                }
                _ => return Err(format!("`{item}` is neither a value nor start:stop:step")),
            }
        }
        Ok(Self(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e5"), Ok(100_000));
        assert_eq!(parse_count("2^7"), Ok(128));
        assert_eq!(parse_count("192"), Ok(192));
        assert!(parse_count("1.5").is_err());
        assert_eq!("2^7,512".parse::<Counts>().unwrap().0, vec![128, 512]);
    }

    #[test]
    fn real_ranges() {
        let r: Reals = "0.5:0.75:0.125,0.9".parse().unwrap();
        assert_eq!(r.0, vec![0.5, 0.625, 0.75, 0.9]);
        assert!("0.9:0.1:0.1".parse::<Reals>().is_err());
    }

    #[test]
    fn config_round_trips() {
        let cli = Cli::try_parse_from(["wlab", "regime", "--H", "0.7", "--n", "10", "--d", "1e5"]).unwrap();
        let cfg = ExperimentConfig {
            command: cli.command,
            seed: 1,
            profile: Profile::Quick,
            threshold: 4.0,
            format: Format::Json,
            threads: None,
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
