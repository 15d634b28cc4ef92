//! Command-line front end: validates workflow configs, runs simulation arms
//! and parameter sweeps, projects finances, evaluates monitoring logs, and
//! assembles the quantitative summary report.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "caliper",
    version,
    about = "Capacity-aware assessment of model-guided workflows: simulation, finances, monitoring"
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "caliper.toml")]
    config: PathBuf,
    /// Output directory; overrides [output].directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replicates override for simulate/sweep.
    #[arg(long, global = true)]
    replicates: Option<u32>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Artifact formats to emit: csv, plot, or both.
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the workflow graph and utility table; print the report.
    Validate,
    /// Run all configured simulation arms plus reference baselines.
    Simulate,
    /// Run the configured parameter sweeps and emit CSV/plots.
    Sweep,
    /// Project the cash flow and rank parameter sensitivities.
    Finance,
    /// Evaluate monitoring logs: drift alerts, time-stratified sensitivity,
    /// adherence, and the update recommendation.
    Monitor,
    /// Assemble the quantitative summary from previously produced artifacts.
    Report,
}

/// Exit codes: 0 success, 1 validation failure, 2 runtime error, 3 I/O error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Validation,
    Runtime,
    Io,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> anyhow::Error {
        anyhow::Error::new(Self { kind: FailureKind::Validation, message: message.into() })
    }

    pub fn runtime(message: impl Into<String>) -> anyhow::Error {
        anyhow::Error::new(Self { kind: FailureKind::Runtime, message: message.into() })
    }

    pub fn io(message: impl Into<String>) -> anyhow::Error {
        anyhow::Error::new(Self { kind: FailureKind::Io, message: message.into() })
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for Failure {}

pub struct Ctx {
    pub config: config::RunConfig,
    pub base_dir: PathBuf,
    pub out: output::OutputDir,
    pub replicates_override: Option<u32>,
    pub format: String,
}

impl Ctx {
    pub fn emit_csv(&self) -> bool {
        self.format == "csv" || self.format == "both"
    }

    pub fn emit_plot(&self) -> bool {
        self.format == "plot" || self.format == "both"
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (mut config, base_dir) = config::RunConfig::load(&cli.config)
        .map_err(|e| Failure::validation(format!("{e:#}")))?;
    if let Some(seed) = cli.seed {
        config.root_seed = seed;
    }
    if let Some(format) = &cli.format {
        match format.as_str() {
            "csv" | "plot" | "both" => config.output.format = format.clone(),
            other => {
                return Err(Failure::validation(format!(
                    "--format must be csv, plot, or both; got '{other}'"
                )))
            }
        }
    }
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::runtime(format!("building thread pool: {e}")))?;
    }

    let out_root = cli.out.unwrap_or_else(|| base_dir.join(&config.output.directory));
    let out = output::OutputDir::create(&out_root).map_err(|e| Failure::io(format!("{e:#}")))?;
    let format = config.output.format.clone();
    let ctx = Ctx { config, base_dir, out, replicates_override: cli.replicates, format };

    match cli.command {
        Command::Validate => commands::validate::run(&ctx),
        Command::Simulate => commands::simulate::run(&ctx),
        Command::Sweep => commands::sweep::run(&ctx),
        Command::Finance => commands::finance::run(&ctx),
        Command::Monitor => commands::monitor::run(&ctx),
        Command::Report => commands::report::run(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = match err.downcast_ref::<Failure>() {
                Some(f) => match f.kind {
                    FailureKind::Validation => ("validation", 1),
                    FailureKind::Runtime => ("runtime", 2),
                    FailureKind::Io => ("io", 3),
                },
                None => ("runtime", 2),
            };
            // One machine-readable line on stderr.
            eprintln!("error: code={code} kind={kind} message={:?}", format!("{err:#}"));
            ExitCode::from(code)
        }
    }
}
