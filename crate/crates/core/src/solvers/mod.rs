//! Iteration engines.
//!
//! [`Method::JacobiProximal`] is the main engine: every block minimizes
//!
//! ```text
//! f_i(x_i) + (ρ/2)‖A_i x_i + Σ_{j≠i} A_j x_j^k − c − λ^k/ρ‖² + ½‖x_i − x_i^k‖²_{P_i}
//! ```
//!
//! against the previous iterate only, after which the multiplier takes the
//! damped step `λ^{k+1} = λ^k − γρ(Σ_i A_i x_i^{k+1} − c)`. Plain Jacobi ADMM,
//! Gauss-Seidel ADMM and dual decomposition are provided as baselines.
//!
//! Block subproblems within one iteration read only the `k`-state and write
//! only their own slot, so they may run concurrently; the multiplier update
//! waits for all of them.

mod engine;
mod policy;
pub mod subproblem;
mod trace;

pub use engine::{
    dual_decomposition_step, gauss_seidel_step, gauss_seidel_step_ordered, jacobi_plain_step, jacobi_proximal_step,
    jacobi_proximal_step_ordered, run, Potential, Solver, DIVERGENCE_THRESHOLD,
};
pub use policy::{materialize_p, ProximalPolicy, PSD_TOL};
pub use subproblem::{solve_block_quadratic, solve_block_scalar_newton};
pub use trace::{IterationRecord, Status, Trace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::problem::ProblemError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("proximal matrix of block {block} is not PSD (lambda_min = {lambda_min:e})")]
    NotPsd { block: usize, lambda_min: f64 },
    #[error("subproblem of block {block} failed: {source}")]
    Subproblem {
        block: usize,
        #[source]
        source: Box<SolveError>,
    },
    #[error("could not bracket a root starting from {x0}")]
    NoBracket { x0: f64 },
    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    MaxItersExceeded { iterations: usize, residual: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SolveError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Penalty `ρ`.
    pub rho: f64,
    /// Dual damping `γ`.
    pub gamma: f64,
    pub policy: ProximalPolicy,
    pub max_iters: usize,
    pub dis_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            gamma: 1.0,
            policy: ProximalPolicy::None,
            max_iters: 4000,
            dis_tol: 1e-10,
            newton_tol: 1e-12,
            newton_max_iters: 100,
        }
    }
}

impl SolverParams {
    pub fn new(rho: f64, gamma: f64, policy: ProximalPolicy) -> Self {
        Self {
            rho,
            gamma,
            policy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(SolveError::InvalidParams(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(SolveError::InvalidParams(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.max_iters < 1 {
            return Err(SolveError::InvalidParams("max_iters must be at least 1".into()));
        }
        if !(self.dis_tol >= 0.0) {
            return Err(SolveError::InvalidParams(format!(
                "dis_tol must be nonnegative, got {}",
                self.dis_tol
            )));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iters < 1 {
            return Err(SolveError::InvalidParams(
                "newton_tol must be positive and newton_max_iters at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    Constant,
    /// `α_k = α_0/√(k+1)`.
    DiminishingInverseSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualDecompositionParams {
    pub alpha0: f64,
    pub schedule: StepSchedule,
}

impl Default for DualDecompositionParams {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            schedule: StepSchedule::DiminishingInverseSqrt,
        }
    }
}

impl DualDecompositionParams {
    pub fn step_size(&self, k: usize) -> f64 {
        match self.schedule {
            StepSchedule::Constant => self.alpha0,
            StepSchedule::DiminishingInverseSqrt => self.alpha0 / ((k + 1) as f64).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) || !self.alpha0.is_finite() {
            return Err(SolveError::InvalidParams(format!(
                "alpha0 must be positive, got {}",
                self.alpha0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    #[serde(rename = "jprox")]
    JacobiProximal,
    JacobiPlain,
    GaussSeidel,
    #[serde(rename = "dual-decomp")]
    DualDecomposition(DualDecompositionParams),
}

#[cfg(test)]
mod tests;
