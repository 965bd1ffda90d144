//! Seeded test problems, reference solutions and `(ρ, γ)` sweeps.

mod generate;
mod output;
mod reference;
mod sweep;

pub use generate::{
    generate_lcqp, generate_resource_alloc, LcqpInstance, ResourceAllocInstance, HESSIAN_EIGEN_SHIFT,
    MAX_RANK_ATTEMPTS, STACK_RANK_TOL,
};
pub use output::{
    format_f64, read_trace_csv, read_trace_file, write_json, write_sweep, write_trace_csv, write_trace_file,
    InstanceFile, Manifest, ManifestCell, TraceRow, MANIFEST_FILE, TRACE_HEADER,
};
pub use reference::{dis_metric, reference_solution, solve_kkt, ReferenceSolution, REFERENCE_ITERS};
pub use sweep::{
    fallback_tau, resolve_policy, run_sweep, PolicyChoice, SweepCell, SweepConfig, SweepInstance, SweepTable,
    DEFAULT_CELL_ITERS, DEFAULT_SEEDS, FIT_TAIL, GAMMA_GRID, RHO_GRID_LARGE, RHO_GRID_SMALL,
};

use thiserror::Error;

use crate::certification::CertError;
use crate::linalg::LinalgError;
use crate::problem::ProblemError;
use crate::solvers::SolveError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("constraint stack still rank deficient after {attempts} draws")]
    DegenerateAfterRetries { attempts: usize },
    #[error("KKT system is singular")]
    SingularKkt,
    #[error("reference run diverged")]
    ReferenceDiverged,
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
