//! `fdrctl`: run dependence-robust multiple-testing procedures over p-value
//! files, sweep truncation levels, evaluate FDR bounds, and verify them by
//! simulation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod input;
mod procedure;
mod svg;

/// Error taxonomy mapped to exit codes: validation problems exit 2,
/// not-applicable verdicts under --strict exit 3, everything else 1.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    NotApplicable(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::NotApplicable(msg) => write!(f, "{msg}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fdr_control::Error> for CliError {
    fn from(e: fdr_control::Error) -> Self {
        match e {
            fdr_control::Error::Internal(msg) => CliError::Internal(msg),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Args)]
pub struct ProcedureArgs {
    /// Target FDR level
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,

    /// Tuning/cap parameter; defaults to 1 for uncapped procedures and 0.5
    /// for the capped and adaptive ones
    #[arg(long, global = true)]
    pub lambda: Option<f64>,

    /// Truncation level
    #[arg(long, global = true)]
    pub k: Option<usize>,

    /// Early-stop rejection cap
    #[arg(long, global = true)]
    pub kappa: Option<usize>,

    /// Lower clamp fraction for adaptive null-count estimates
    #[arg(long = "C", global = true)]
    pub c: Option<f64>,

    /// Upper clamp fraction for adaptive null-count estimates
    #[arg(long, global = true)]
    pub delta: Option<f64>,

    /// bh, by, bonferroni, bh-k, es-k, sp-k, w2, w3, w4, adaptive-bh,
    /// adaptive-w2, adaptive-w3, adaptive-w4
    #[arg(long, global = true, default_value = "bh")]
    pub procedure: String,

    /// su (step-up) or sd (step-down)
    #[arg(long, global = true, default_value = "su")]
    pub mode: String,

    /// Skip the estimate clamp for adaptive procedures (demonstrates where
    /// the raw plug-in loses control)
    #[arg(long, global = true, default_value_t = false)]
    pub unclamped: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub procedure: ProcedureArgs,

    /// Input file: one p-value per line, or delimited with --column
    #[arg(long)]
    pub input: PathBuf,

    /// Column selector for delimited input (1-based position or header name)
    #[arg(long)]
    pub column: Option<String>,

    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub procedure: ProcedureArgs,

    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub column: Option<String>,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Smallest truncation level (default 1)
    #[arg(long)]
    pub k_min: Option<usize>,

    /// Largest truncation level (default m)
    #[arg(long)]
    pub k_max: Option<usize>,

    /// Also write an SVG line chart next to sweep.csv
    #[arg(long, default_value_t = false)]
    pub emit_svg: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub procedure: ProcedureArgs,

    /// Number of hypotheses
    #[arg(long)]
    pub m: usize,

    /// Assumed number of true nulls (default m, the worst case)
    #[arg(long)]
    pub m0: Option<usize>,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Exit with code 3 if any reported bound is not applicable
    #[arg(long, default_value_t = false)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub procedure: ProcedureArgs,

    /// bi, extreme or equicorrelated
    #[arg(long, default_value = "bi")]
    pub scenario: String,

    #[arg(long, default_value_t = 100)]
    pub m: usize,

    #[arg(long, default_value_t = 80)]
    pub m0: usize,

    /// Alternative strength: Beta shape under bi, mean shift under
    /// equicorrelated
    #[arg(long, default_value_t = 0.1)]
    pub effect: f64,

    /// Common correlation for the equicorrelated scenario
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,

    #[arg(long, default_value_t = 10_000)]
    pub reps: u32,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Exit with code 3 if the simulated FDR exceeds the bound
    #[arg(long, default_value_t = false)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one procedure over a p-value file and write the rejection set
    Analyze(AnalyzeArgs),
    /// Rejection counts across truncation levels, with reference rows
    #[command(name = "sweep-k")]
    SweepK(SweepArgs),
    /// Evaluate the FDR bounds for a hypothetical configuration
    Bounds(BoundsArgs),
    /// Monte-Carlo error-rate estimation against the matching bound
    Simulate(SimulateArgs),
}

#[derive(Debug, Parser)]
#[command(
    name = "fdrctl",
    version,
    about = "Dependence-robust step-up/step-down multiple testing",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(args) => {
            commands::procedure_args_sanity(&args.procedure)?;
            commands::analyze(args)
        }
        Command::SweepK(args) => {
            commands::procedure_args_sanity(&args.procedure)?;
            commands::sweep_k(args)
        }
        Command::Bounds(args) => {
            commands::procedure_args_sanity(&args.procedure)?;
            commands::bounds(args)
        }
        Command::Simulate(args) => {
            commands::procedure_args_sanity(&args.procedure)?;
            commands::simulate(args)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Validation(_) => ExitCode::from(2),
                CliError::NotApplicable(_) => ExitCode::from(3),
                CliError::Internal(_) => ExitCode::from(1),
            }
        }
    }
}
