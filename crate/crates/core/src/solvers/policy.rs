use serde::{Deserialize, Serialize};

use crate::linalg::{min_eigenvalue_sym, spectral_norm, DenseMatrix};
use crate::problem::BlockProblem;

use super::{Result, SolveError};

/// Negative eigenvalue slack accepted for explicit proximal matrices.
pub const PSD_TOL: f64 = 1e-10;

/// Rule producing the proximal matrix `P_i` of every block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProximalPolicy {
    /// `P_i = τ_i I`.
    StandardProximal {
        tau: Vec<f64>,
    },
    /// `P_i = τ_i I − ρ A_iᵀA_i`, requires `τ_i ≥ ρ‖A_i‖²`.
    ProxLinear {
        tau: Vec<f64>,
    },
    Explicit {
        p: Vec<DenseMatrix>,
    },
    /// `P_i = 0`.
    None,
}

impl ProximalPolicy {
    pub fn standard_uniform(tau: f64, n_blocks: usize) -> Self {
        ProximalPolicy::StandardProximal {
            tau: vec![tau; n_blocks],
        }
    }

    pub fn prox_linear_uniform(tau: f64, n_blocks: usize) -> Self {
        ProximalPolicy::ProxLinear {
            tau: vec![tau; n_blocks],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProximalPolicy::StandardProximal { .. } => "standard",
            ProximalPolicy::ProxLinear { .. } => "proxlinear",
            ProximalPolicy::Explicit { .. } => "explicit",
            ProximalPolicy::None => "none",
        }
    }

    fn block_count(&self) -> Option<usize> {
        match self {
            ProximalPolicy::StandardProximal { tau } | ProximalPolicy::ProxLinear { tau } => Some(tau.len()),
            ProximalPolicy::Explicit { p } => Some(p.len()),
            ProximalPolicy::None => None,
        }
    }

    /// `P_i` for block `block` with constraint matrix `a`.
    pub fn materialize(&self, block: usize, rho: f64, a: &DenseMatrix) -> Result<DenseMatrix> {
        if !(rho > 0.0) {
            return Err(SolveError::InvalidParams(format!("rho must be positive, got {rho}")));
        }
        let n = a.cols();
        let tau_at = |tau: &[f64]| -> Result<f64> {
            let t = *tau
                .get(block)
                .ok_or_else(|| SolveError::InvalidParams(format!("policy has no tau for block {block}")))?;
            if !(t > 0.0) || !t.is_finite() {
                return Err(SolveError::InvalidParams(format!("tau must be positive, got {t}")));
            }
            Ok(t)
        };
        match self {
            ProximalPolicy::StandardProximal { tau } => Ok(DenseMatrix::scaled_identity(n, tau_at(tau)?)),
            ProximalPolicy::ProxLinear { tau } => {
                let t = tau_at(tau)?;
                let a_norm = spectral_norm(a)?;
                let floor = rho * a_norm * a_norm;
                if t < floor * (1.0 - 1e-12) {
                    return Err(SolveError::NotPsd {
                        block,
                        lambda_min: t - floor,
                    });
                }
                Ok(a.gram().scale(-rho).add_diagonal(t))
            }
            ProximalPolicy::Explicit { p } => {
                let pi = p
                    .get(block)
                    .ok_or_else(|| SolveError::InvalidParams(format!("policy has no matrix for block {block}")))?;
                if pi.shape() != (n, n) {
                    return Err(SolveError::InvalidParams(format!(
                        "explicit P_{block} is {}x{}, block dimension is {n}",
                        pi.rows(),
                        pi.cols()
                    )));
                }
                let lambda_min = min_eigenvalue_sym(pi)?;
                if lambda_min < -PSD_TOL {
                    return Err(SolveError::NotPsd { block, lambda_min });
                }
                Ok(pi.clone())
            }
            ProximalPolicy::None => Ok(DenseMatrix::zeros(n, n)),
        }
    }

    /// Every `P_i` of `problem`.
    pub fn materialize_all(&self, problem: &BlockProblem, rho: f64) -> Result<Vec<DenseMatrix>> {
        if let Some(count) = self.block_count() {
            if count != problem.n_blocks() {
                return Err(SolveError::InvalidParams(format!(
                    "policy covers {count} blocks, problem has {}",
                    problem.n_blocks()
                )));
            }
        }
        problem
            .blocks()
            .iter()
            .enumerate()
            .map(|(i, b)| self.materialize(i, rho, &b.a))
            .collect()
    }
}

/// Free-function form of [`ProximalPolicy::materialize`].
pub fn materialize_p(policy: &ProximalPolicy, block: usize, rho: f64, a: &DenseMatrix) -> Result<DenseMatrix> {
    policy.materialize(block, rho, a)
}
