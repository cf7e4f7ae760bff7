//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid flags or input documents, 3 evaluation
//! failures, 4 `solve --verify` disagreement above `--verify-tol`.

pub mod commands;
pub mod document;
pub mod expr;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use document::{DocumentError, ProblemDocument};
pub use expr::{parse_rhs, ExprError, RhsExpression};

#[derive(Debug, Parser)]
#[command(
    name = "hdml",
    version,
    about = "Delayed Mittag-Leffler matrix functions and Hadamard fractional delay systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample Y(t, s) and write CSV to standard output.
    Eval(EvalArgs),
    /// Solve the problem in a JSON document.
    Solve(SolveArgs),
    /// Report the existence and Ulam-Hyers constants of a problem as JSON.
    Stability(StabilityArgs),
    /// Branch table and samples of the delayed example with alpha = 0.3, h = 1.2.
    ReproduceExample(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Defaults to alpha.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: f64,
    /// Matrix as JSON rows, e.g. "[[1,0],[0,1]]". Defaults to zero.
    #[arg(long = "A0")]
    pub a0: Option<String>,
    #[arg(long = "A1")]
    pub a1: String,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub s: f64,
    /// "lo,hi" in t.
    #[arg(long = "t-range", allow_hyphen_values = true)]
    pub t_range: String,
    #[arg(long, default_value_t = 11)]
    pub points: usize,
    /// Closed form for A0 = 0.
    #[arg(long)]
    pub pure_delay: bool,
    /// Adds the scalar majorant as a column.
    #[arg(long)]
    pub bound: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub problem: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub grid_per_interval: usize,
    /// Compare against the direct product-integration solver.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value_t = 1e-4)]
    pub verify_tol: f64,
    #[arg(long, default_value_t = 512)]
    pub verify_steps: usize,
    /// Trajectory CSV; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON report; standard error when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    pub problem: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long = "t-points", value_delimiter = ',', default_values_t = [1.1, 1.3, 1.6, 2.0])]
    pub t_points: Vec<f64>,
    /// History components as expressions in t.
    #[arg(long, value_delimiter = ',', default_values_t = ["1".to_string(), "ln(1.2*t) + 1".to_string()])]
    pub phi: Vec<String>,
    /// Also write the samples as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// A failed command with its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Eval(String),
    #[error("{0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Eval(_) => 3,
            CliError::Verify(_) => 4,
        }
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Parses `args` and runs the command, returning the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Eval(a) => commands::eval(a, out),
        Command::Solve(a) => commands::solve(a, out, err),
        Command::Stability(a) => commands::stability(a, out),
        Command::ReproduceExample(a) => commands::reproduce_example(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
