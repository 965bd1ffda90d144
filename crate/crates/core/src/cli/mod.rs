//! `jprox` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid flags, 3 I/O or parse failure,
//! 4 certification failed, 5 divergence.

mod commands;
pub mod svg;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CERT: i32 = 4;
pub const EXIT_DIVERGED: i32 = 5;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "JPROX_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "jprox",
    version,
    about = "Jacobi-Proximal ADMM with linear-rate certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random test instance.
    Generate(GenerateArgs),
    /// Certify linear convergence for (rho, gamma, P).
    Certify(CertifyArgs),
    /// Run a solver and write its trace.
    Solve(SolveArgs),
    /// Run a (rho, gamma) grid on one instance.
    Sweep(SweepArgs),
    /// Plot a sweep directory and tabulate its fitted rates.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstanceKind {
    /// Linearly constrained quadratic program.
    Lcqp,
    /// Scalar resource allocation with logistic-quadratic costs.
    Ra,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: InstanceKind,
    #[arg(long = "N")]
    pub n_blocks: i64,
    #[arg(long)]
    pub m: Option<i64>,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "instance.json")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyFlag {
    Standard,
    Proxlinear,
    None,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodFlag {
    Jprox,
    JacobiPlain,
    GaussSeidel,
    DualDecomp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitFlag {
    /// All-zero starting point.
    Zero,
    /// Start at the instance's reference solution.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauFlag {
    Auto,
    Value(f64),
}

impl FromStr for TauFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(TauFlag::Auto);
        }
        s.parse::<f64>()
            .map(TauFlag::Value)
            .map_err(|_| format!("expected a number or 'auto', got {s:?}"))
    }
}

impl fmt::Display for TauFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauFlag::Auto => write!(f, "auto"),
            TauFlag::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[arg(long, value_enum, default_value = "standard")]
    pub policy: PolicyFlag,
    #[arg(long, allow_hyphen_values = true, default_value = "auto")]
    pub tau: TauFlag,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "certificate.json")]
    pub output: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "trace.csv")]
    pub output: PathBuf,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub gamma: f64,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, value_enum, default_value = "jprox")]
    pub method: MethodFlag,
    #[arg(long = "max-iters", allow_hyphen_values = true, default_value_t = 4000)]
    pub max_iters: i64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "zero")]
    pub init: InitFlag,
    /// Also write an SVG of log10(dis) next to the trace.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "sweep")]
    pub output: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Comma-separated penalty grid (default depends on N).
    #[arg(long = "rho-grid", value_delimiter = ',')]
    pub rho_grid: Option<Vec<f64>>,
    /// Comma-separated damping grid.
    #[arg(long = "gamma-grid", value_delimiter = ',')]
    pub gamma_grid: Option<Vec<f64>>,
    #[arg(long = "max-iters", allow_hyphen_values = true, default_value_t = 4000)]
    pub max_iters: i64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Sweep directory containing manifest.json.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for SVGs and the rate table (defaults to the input).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            // a pool may already exist when embedded; keep it
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Certify(a) => commands::certify(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
