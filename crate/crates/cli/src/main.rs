mod analytic;
mod args;
mod report;
mod studies;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command, ExperimentConfig, Format, Profile, DEFAULT_SEED};
use report::Report;
use studies::{Ctx, Samples};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration: exit 2.
    Usage(String),
    /// Failure while running: exit 3.
    Runtime(String),
}

impl From<wlab::Error> for CliError {
    fn from(e: wlab::Error) -> Self {
        use wlab::Error as E;
        match e {
            E::Parameter { .. }
            | E::TableOrigin(_)
            | E::NotPositiveSemidefinite { .. }
            | E::NotSquareSummable
            | E::Dimension(_) => Self::Usage(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

enum Output {
    Table(Report),
    Samples(Samples),
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("WLAB_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("WLAB_SEED `{v}` is not a 64-bit unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// A JSON report carries its config under `config`; a bare config is accepted too.
fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let cfg = doc.get("config").cloned().unwrap_or(doc);
    let cfg: ExperimentConfig =
        serde_json::from_value(cfg).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if matches!(cfg.command, Command::Replay(_)) {
        return Err(CliError::Usage("a replay config cannot point at another replay".into()));
    }
    Ok(cfg)
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.command {
        Command::Replay(r) => load_config(&r.file)?,
        command => ExperimentConfig {
            command: command.clone(),
            seed: cli.global.seed.unwrap_or(DEFAULT_SEED),
            profile: if cli.global.full { Profile::Full } else { Profile::Quick },
            threshold: cli.global.threshold,
            format: cli.global.format,
            threads: cli.global.threads,
        },
    };
    if let Some(seed) = env_seed()? {
        cfg.seed = seed;
    }
    if cfg.threshold.is_nan() || cfg.threshold <= 0.0 {
        return Err(CliError::Usage("--threshold must be positive".into()));
    }
    if cfg.threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    Ok(cfg)
}

fn run(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let ctx = Ctx {
        seed: cfg.seed,
        threads: cfg.threads,
        threshold: cfg.threshold,
        profile: cfg.profile,
    };
    let report = match &cfg.command {
        Command::Kernel(a) => analytic::kernel(a)?,
        Command::Bounds(a) => analytic::bounds(a)?,
        Command::Regime(a) => analytic::regime(a)?,
        Command::Contraction(a) => analytic::contraction(a)?,
        Command::Sample(a) => return Ok(Output::Samples(studies::sample(a, &ctx)?)),
        Command::VerifyCovariance(a) => studies::verify_covariance(a, &ctx)?,
        Command::Decay(a) => studies::decay(a, &ctx)?,
        Command::Rosenblatt(a) => studies::rosenblatt(a, &ctx)?,
        Command::Tensor(a) => studies::tensor(a, &ctx)?,
        Command::Replay(_) => unreachable!("replay resolves to the stored config"),
    };
    Ok(Output::Table(report))
}

fn render_samples(s: &Samples, cfg: &ExperimentConfig) -> String {
    match cfg.format {
        Format::Csv => s.matrices.iter().map(|m| m.to_csv()).collect(),
        Format::Json => {
            let mats: Vec<Value> = s
                .matrices
                .iter()
                .map(|m| serde_json::from_str(&m.to_json()).expect("ensemble JSON"))
                .collect();
            serde_json::to_string_pretty(&json!({ "config": cfg, "matrices": mats })).expect("serializes") + "\n"
        }
        Format::Text => {
            let mut out = format!("# wlab sample (seed {})\n", cfg.seed);
            for (k, m) in s.matrices.iter().enumerate() {
                out += &format!("## realization {k}: {:?}, n = {}, d = {}\n", m.kind, m.n, m.params.d);
                for row in m.values.rows() {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
                    out += &cells.join(" ");
                    out.push('\n');
                }
            }
            out
        }
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<ExitCode, CliError> {
    let cfg = build_config(&cli)?;
    let output = run(&cfg)?;
    let report = match output {
        Output::Samples(s) => {
            emit(&render_samples(&s, &cfg), cli.global.output.as_deref())?;
            return Ok(ExitCode::SUCCESS);
        }
        Output::Table(r) => r,
    };
    emit(&report.render(&cfg, cfg.format), cli.global.output.as_deref())?;
    if let Some(svg_path) = &cli.global.svg {
        let svg = report
            .to_svg()
            .ok_or_else(|| CliError::Usage(format!("`{}` has no plot", cfg.command.name())))?;
        fs::write(svg_path, svg)?;
        fs::write(svg_path.with_extension("csv"), report.to_csv())?;
    }
    if report.passed() == Some(false) {
        eprintln!("{}", report.diagnostics(&cfg));
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
