use serde::{Deserialize, Serialize};

use crate::linalg::{
    max_eigenvalue_sym, min_eigenvalue_sym, smallest_singular_value_stacked, spectral_norm, LinalgError,
};
use crate::problem::{BlockObjective, BlockProblem};

use super::{CertError, Result};

/// Problem-level constants feeding the step-size and rate conditions.
///
/// The strong-convexity modulus uses the `f(y) ≥ f(x) + ⟨∇f(x), y−x⟩ + α‖y−x‖²`
/// convention, so a quadratic block with Hessian `H` has modulus `½λ_min(H)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub alpha: f64,
    /// Per-block moduli; `alpha` is their minimum.
    pub moduli: Vec<f64>,
    /// Per-block gradient Lipschitz constants `L_i`.
    pub l_list: Vec<f64>,
    /// `(max_i L_i)²`.
    pub l: f64,
    /// `Σ_i ‖A_i‖²`.
    pub d: f64,
    /// Smallest singular value of `[A_1ᵀ; …; A_Nᵀ]`.
    pub c_a: f64,
    pub a_norms: Vec<f64>,
}

impl ProblemConstants {
    pub fn n_blocks(&self) -> usize {
        self.a_norms.len()
    }
}

/// Constants of `p`; `alpha` may be nonpositive.
pub(crate) fn estimate_constants_unchecked(p: &BlockProblem) -> Result<ProblemConstants> {
    let mut moduli = Vec::with_capacity(p.n_blocks());
    let mut l_list = Vec::with_capacity(p.n_blocks());
    let mut a_norms = Vec::with_capacity(p.n_blocks());
    for block in p.blocks() {
        let (modulus, lipschitz) = match &block.objective {
            BlockObjective::Quadratic(q) => (0.5 * min_eigenvalue_sym(q.h())?, max_eigenvalue_sym(q.h())?),
            BlockObjective::LogisticQuad(l) => (0.5 * l.a, l.lipschitz()),
            BlockObjective::Generic(g) => (g.modulus, g.lipschitz),
        };
        moduli.push(modulus);
        l_list.push(lipschitz);
        a_norms.push(spectral_norm(&block.a)?);
    }
    let alpha = moduli.iter().copied().fold(f64::INFINITY, f64::min);
    let l_max = l_list.iter().copied().fold(0.0, f64::max);
    let c_a = match smallest_singular_value_stacked(&p.constraint_matrices()) {
        Ok(v) => v,
        Err(LinalgError::RankDeficient { c_a, .. }) => c_a,
        Err(e) => return Err(e.into()),
    };
    Ok(ProblemConstants {
        alpha,
        moduli,
        l_list,
        l: l_max * l_max,
        d: a_norms.iter().map(|a| a * a).sum(),
        c_a,
        a_norms,
    })
}

/// Constants of `p`. Fails with `NotStronglyConvex` when `α ≤ 0`.
pub fn estimate_constants(p: &BlockProblem) -> Result<ProblemConstants> {
    let c = estimate_constants_unchecked(p)?;
    if !(c.alpha > 0.0) {
        return Err(CertError::NotStronglyConvex { alpha: c.alpha });
    }
    Ok(c)
}

/// Largest admissible step parameter:
/// `s̄ = min_i (α/(2N)) / (ρ²D‖A_i‖² + L/N)`.
pub fn max_feasible_s(consts: &ProblemConstants, rho: f64, n: usize) -> Result<f64> {
    if !(consts.alpha > 0.0) {
        return Err(CertError::NotStronglyConvex { alpha: consts.alpha });
    }
    if !(rho > 0.0) || n == 0 {
        return Err(CertError::InvalidInput(format!(
            "need rho > 0 and N >= 1, got rho = {rho}, N = {n}"
        )));
    }
    let nf = n as f64;
    let s_bar = consts
        .a_norms
        .iter()
        .map(|a| (consts.alpha / (2.0 * nf)) / (rho * rho * consts.d * a * a + consts.l / nf))
        .fold(f64::INFINITY, f64::min);
    Ok(s_bar)
}
