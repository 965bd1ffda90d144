use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;
use crate::problem::{BlockProblem, PrimalDualPoint};
use crate::solvers::Potential;

use super::conditions::Certificate;
use super::constants::ProblemConstants;
use super::{CertError, Result};

/// Values at or below this count as exactly zero in contraction checks.
pub const PHI_ZERO: f64 = 1e-14;

/// Absolute slack of the contraction test, scaled by `1 + φ_k`.
pub const CONTRACTION_SLACK: f64 = 1e-12;

/// `φ(u) = (1/2γρ)‖λ − λ*‖² + ½Σ_i ‖x_i − x_i*‖²_{W_i}` with
/// `W_i = ρA_iᵀA_i + P_i + 2(α − 2Ls)I`.
#[derive(Debug, Clone)]
pub struct Lyapunov {
    reference: PrimalDualPoint,
    dual_weight: f64,
    weights: Vec<DenseMatrix>,
}

impl Lyapunov {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: &BlockProblem,
        reference: &PrimalDualPoint,
        gamma: f64,
        rho: f64,
        s: f64,
        p_list: &[DenseMatrix],
        consts: &ProblemConstants,
    ) -> Result<Self> {
        p.check_point(reference)?;
        let alpha_2ls = consts.alpha - 2.0 * consts.l * s;
        if !(alpha_2ls > 0.0) {
            return Err(CertError::NonPositiveWeight { alpha_2ls });
        }
        if !(gamma > 0.0) || !(rho > 0.0) {
            return Err(CertError::InvalidInput(format!(
                "need gamma, rho > 0, got {gamma}, {rho}"
            )));
        }
        if p_list.len() != p.n_blocks() {
            return Err(CertError::InvalidInput(format!(
                "{} proximal matrices for {} blocks",
                p_list.len(),
                p.n_blocks()
            )));
        }
        let weights = p
            .blocks()
            .iter()
            .zip(p_list)
            .map(|(b, pm)| Ok(b.a.gram().scale(rho).add(pm)?.add_diagonal(2.0 * alpha_2ls)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            reference: reference.clone(),
            dual_weight: 1.0 / (2.0 * gamma * rho),
            weights,
        })
    }

    /// The potential matching a certificate's `(ρ, γ, P_i, s)`.
    pub fn from_certificate(p: &BlockProblem, cert: &Certificate, reference: &PrimalDualPoint) -> Result<Self> {
        let p_list = cert.policy.materialize_all(p, cert.rho)?;
        Self::new(p, reference, cert.gamma, cert.rho, cert.s, &p_list, &cert.constants)
    }

    pub fn reference(&self) -> &PrimalDualPoint {
        &self.reference
    }

    /// `φ(u)`; `u` must have the reference's shape.
    pub fn evaluate(&self, u: &PrimalDualPoint) -> f64 {
        let dl = u.lambda.sub(&self.reference.lambda);
        let primal: f64 =
            u.x.iter()
                .zip(&self.reference.x)
                .zip(&self.weights)
                .map(|((x, xs), w)| w.quadratic_form(x.sub(xs).as_slice()))
                .sum();
        self.dual_weight * dl.norm_squared() + 0.5 * primal
    }
}

impl Potential for Lyapunov {
    fn value(&self, u: &PrimalDualPoint) -> f64 {
        self.evaluate(u)
    }
}

/// One-shot evaluation of the potential.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_phi(
    p: &BlockProblem,
    u: &PrimalDualPoint,
    reference: &PrimalDualPoint,
    gamma: f64,
    rho: f64,
    s: f64,
    p_list: &[DenseMatrix],
    consts: &ProblemConstants,
) -> Result<f64> {
    p.check_point(u)?;
    Ok(Lyapunov::new(p, reference, gamma, rho, s, p_list, consts)?.evaluate(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub phi_k: f64,
    pub phi_next: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub sigma: f64,
    pub checked: usize,
    pub violations: Vec<Violation>,
    /// `φ_{k+1}/φ_k`, `None` when `φ_k` is numerically zero.
    pub ratios: Vec<Option<f64>>,
}

impl ContractionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios.iter().flatten().copied().reduce(f64::max)
    }
}

/// Checks `φ_{k+1} ≤ σφ_k + 1e-12(1 + φ_k)` for every consecutive pair.
pub fn verify_contraction_series(phi: &[f64], sigma: f64) -> ContractionReport {
    let mut violations = Vec::new();
    let mut ratios = Vec::with_capacity(phi.len().saturating_sub(1));
    for (k, w) in phi.windows(2).enumerate() {
        let (cur, next) = (w[0], w[1]);
        if cur <= PHI_ZERO && next <= PHI_ZERO {
            ratios.push(None);
            continue;
        }
        ratios.push((cur > PHI_ZERO).then(|| next / cur));
        let bound = sigma * cur + CONTRACTION_SLACK * (1.0 + cur);
        if !(next <= bound) {
            violations.push(Violation {
                k,
                phi_k: cur,
                phi_next: next,
                bound,
            });
        }
    }
    ContractionReport {
        sigma,
        checked: phi.len().saturating_sub(1),
        violations,
        ratios,
    }
}

/// Evaluates `φ` along `points` and checks the certificate's contraction.
pub fn verify_contraction(
    points: &[PrimalDualPoint],
    cert: &Certificate,
    potential: &Lyapunov,
) -> Result<ContractionReport> {
    let sigma = match (cert.passed, cert.sigma) {
        (true, Some(s)) => s,
        _ => return Err(CertError::NotCertified),
    };
    let phi: Vec<f64> = points.iter().map(|u| potential.evaluate(u)).collect();
    Ok(verify_contraction_series(&phi, sigma))
}
