//! Linear-convergence certificates for the Jacobi-Proximal engine.
//!
//! Given `(ρ, γ, P_i)` the certificate picks `s = s̄/2`, checks the per-block
//! positive-definiteness condition for the `ξ_i`, and reports the contraction
//! factor `σ` of the potential `φ` together with every margin.

mod conditions;
mod constants;
mod lyapunov;
mod rate;

pub use conditions::{
    auto_tau, auto_tau_policy, certify, check_xi_condition, check_xi_condition_with, compute_mu_s, compute_sigma,
    Certificate, CertifyOptions, Failure, Margins, SigmaValue, TauKind, XiCheck, XiMode, AUTO_TAU_FACTOR,
    C_A_CLAMP_SHRINK, XI_SHRINK,
};
pub use constants::{estimate_constants, max_feasible_s, ProblemConstants};
pub use lyapunov::{
    lyapunov_phi, verify_contraction, verify_contraction_series, ContractionReport, Lyapunov, Violation,
    CONTRACTION_SLACK, PHI_ZERO,
};
pub use rate::{fit_linear_rate, RateFit, MIN_TAIL_POINTS, RATE_FLOOR};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::problem::ProblemError;
use crate::solvers::SolveError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("gamma out of (0,2): {gamma}")]
    GammaOutOfRange { gamma: f64 },
    #[error("objective is not strongly convex (alpha = {alpha:e})")]
    NotStronglyConvex { alpha: f64 },
    #[error("potential weight alpha - 2Ls = {alpha_2ls:e} is not positive")]
    NonPositiveWeight { alpha_2ls: f64 },
    #[error("no admissible tau found for block {block}")]
    NoAdmissibleTau { block: usize },
    #[error("certificate did not pass")]
    NotCertified,
    #[error("insufficient data: {points} usable points, {required} required")]
    InsufficientData { points: usize, required: usize },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, CertError>;

#[cfg(test)]
mod tests;
