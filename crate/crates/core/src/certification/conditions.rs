use serde::{Deserialize, Serialize};

use crate::linalg::{generalized_max_eigenvalue, min_eigenvalue_sym, DenseMatrix};
use crate::problem::BlockProblem;
use crate::solvers::ProximalPolicy;

use super::constants::{estimate_constants, estimate_constants_unchecked, max_feasible_s, ProblemConstants};
use super::{CertError, Result};

/// Relative shrink applied to the uniform `ξ_i` so that `Σξ_i < 2 − γ`.
pub const XI_SHRINK: f64 = 1e-6;

/// Relative shrink applied when clamping `c_A` into `(0, 1/√(2γρs))`.
pub const C_A_CLAMP_SHRINK: f64 = 1e-9;

/// Scale applied to the smallest admissible `τ_i` by [`auto_tau`].
pub const AUTO_TAU_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiMode {
    /// `ξ_i = (1 − 1e-6)(2 − γ)/N` for every block.
    #[default]
    Uniform,
    /// Per-block smallest admissible `ξ_i`, remaining slack shared evenly.
    Refined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiCheck {
    pub passed: bool,
    /// `λ_min(M_i)` per block.
    pub min_eigs: Vec<f64>,
    pub xi: Vec<f64>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(CertError::GammaOutOfRange { gamma })
    }
}

/// `K_i − 8sK_iᵀK_i − (ρ/ξ)A_iᵀA_i` with `K_i = ρA_iᵀA_i + P_i`.
fn xi_matrix(ata: &DenseMatrix, p: &DenseMatrix, rho: f64, s: f64, xi: f64) -> Result<DenseMatrix> {
    let k = ata.scale(rho).add(p)?;
    let kk = k.transpose().matmul(&k)?;
    Ok(k.sub(&kk.scale(8.0 * s))?.sub(&ata.scale(rho / xi))?.symmetrized())
}

fn xi_min_eig(ata: &DenseMatrix, p: &DenseMatrix, rho: f64, s: f64, xi: f64) -> Result<f64> {
    Ok(min_eigenvalue_sym(&xi_matrix(ata, p, rho, s, xi)?)?)
}

/// Checks `ρA_iᵀA_i + P_i − 8s(ρA_iᵀA_i+P_i)ᵀ(ρA_iᵀA_i+P_i) − (ρ/ξ_i)A_iᵀA_i ≻ 0`
/// for every block with the uniform `ξ_i`.
pub fn check_xi_condition(p: &BlockProblem, rho: f64, gamma: f64, s: f64, p_list: &[DenseMatrix]) -> Result<XiCheck> {
    check_xi_condition_with(p, rho, gamma, s, p_list, XiMode::Uniform)
}

pub fn check_xi_condition_with(
    p: &BlockProblem,
    rho: f64,
    gamma: f64,
    s: f64,
    p_list: &[DenseMatrix],
    mode: XiMode,
) -> Result<XiCheck> {
    check_gamma(gamma)?;
    if !(s > 0.0) || !(rho > 0.0) {
        return Err(CertError::InvalidInput(format!(
            "need s > 0 and rho > 0, got s = {s}, rho = {rho}"
        )));
    }
    check_p_list(p, p_list)?;
    let n = p.n_blocks() as f64;
    let budget = 2.0 - gamma;
    let grams: Vec<DenseMatrix> = p.blocks().iter().map(|b| b.a.gram()).collect();
    let xi = match mode {
        XiMode::Uniform => vec![(1.0 - XI_SHRINK) * budget / n; p.n_blocks()],
        XiMode::Refined => refined_xi(&grams, p_list, rho, s, budget)?,
    };
    let min_eigs = grams
        .iter()
        .zip(p_list)
        .zip(&xi)
        .map(|((ata, pm), &x)| xi_min_eig(ata, pm, rho, s, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(XiCheck {
        passed: min_eigs.iter().all(|&e| e > 0.0),
        min_eigs,
        xi,
    })
}

/// Smallest `ξ_i ∈ (0, budget)` with a positive-definite `M_i` (bisection;
/// `M_i` is monotone in `ξ_i`), then the leftover budget split evenly.
/// Falls back to the uniform choice when the minimal values do not fit.
fn refined_xi(grams: &[DenseMatrix], p_list: &[DenseMatrix], rho: f64, s: f64, budget: f64) -> Result<Vec<f64>> {
    let n = grams.len() as f64;
    let uniform = vec![(1.0 - XI_SHRINK) * budget / n; grams.len()];
    let mut minimal = Vec::with_capacity(grams.len());
    for (ata, pm) in grams.iter().zip(p_list) {
        if xi_min_eig(ata, pm, rho, s, budget)? <= 0.0 {
            return Ok(uniform);
        }
        let (mut lo, mut hi) = (0.0_f64, budget);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= 0.0 || xi_min_eig(ata, pm, rho, s, mid)? <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        minimal.push(hi);
    }
    let used: f64 = minimal.iter().sum();
    if used >= budget {
        return Ok(uniform);
    }
    let share = (1.0 - XI_SHRINK) * (budget - used) / n;
    Ok(minimal.into_iter().map(|x| x + share).collect())
}

fn check_p_list(p: &BlockProblem, p_list: &[DenseMatrix]) -> Result<()> {
    if p_list.len() != p.n_blocks() {
        return Err(CertError::InvalidInput(format!(
            "{} proximal matrices for {} blocks",
            p_list.len(),
            p.n_blocks()
        )));
    }
    for (i, (b, pm)) in p.blocks().iter().zip(p_list).enumerate() {
        if pm.shape() != (b.dim(), b.dim()) {
            return Err(CertError::InvalidInput(format!(
                "P_{i} is {}x{}, block dimension is {}",
                pm.rows(),
                pm.cols(),
                b.dim()
            )));
        }
    }
    Ok(())
}

/// `μ_s = max_i λ_max((ρ + 4Nsρ²D)A_iᵀA_i + P_i, ρA_iᵀA_i + P_i + 2(α − 2Ls)I)`,
/// the generalized eigenvalue of the pair.
pub fn compute_mu_s(
    p: &BlockProblem,
    consts: &ProblemConstants,
    rho: f64,
    s: f64,
    p_list: &[DenseMatrix],
) -> Result<f64> {
    check_p_list(p, p_list)?;
    let weight = consts.alpha - 2.0 * consts.l * s;
    if !(weight > 0.0) {
        return Err(CertError::NonPositiveWeight { alpha_2ls: weight });
    }
    let n = p.n_blocks() as f64;
    let lead = rho + 4.0 * n * s * rho * rho * consts.d;
    p.blocks()
        .iter()
        .zip(p_list)
        .map(|(b, pm)| {
            let ata = b.a.gram();
            let left = ata.scale(lead).add(pm)?;
            let right = ata.scale(rho).add(pm)?.add_diagonal(2.0 * weight);
            Ok(generalized_max_eigenvalue(&left, &right)?)
        })
        .try_fold(f64::NEG_INFINITY, |acc, v: Result<f64>| Ok(acc.max(v?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaValue {
    pub sigma: f64,
    /// `σ ∈ (0, 1)`.
    pub contractive: bool,
    /// `c_A` actually used (after clamping).
    pub c_a_used: f64,
    pub clamped: bool,
}

/// `σ = max(1 − 2γρs·c_A², μ_s)`, clamping `c_A` below `1/√(2γρs)`.
pub fn compute_sigma(gamma: f64, rho: f64, s: f64, c_a: f64, mu_s: f64) -> SigmaValue {
    let limit = 1.0 / (2.0 * gamma * rho * s).sqrt();
    let (c_a_used, clamped) = if c_a >= limit {
        ((1.0 - C_A_CLAMP_SHRINK) * limit, true)
    } else {
        (c_a, false)
    };
    let first = 1.0 - 2.0 * gamma * rho * s * c_a_used * c_a_used;
    let sigma = first.max(mu_s);
    SigmaValue {
        sigma,
        contractive: sigma > 0.0 && sigma < 1.0,
        c_a_used,
        clamped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Moduli at or below this are treated as not strongly convex.
    pub alpha_floor: f64,
    pub xi_mode: XiMode,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            alpha_floor: 1e-3,
            xi_mode: XiMode::Uniform,
        }
    }
}

/// Reason a certificate did not pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Failure {
    NotStronglyConvex { alpha: f64, floor: f64 },
    XiCondition { block: usize, min_eig: f64 },
    XiBudget { slack: f64 },
    MuNotContractive { mu_s: f64 },
    SigmaNotContractive { sigma: f64 },
    RankDeficient { c_a: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// `1 − s/s̄`.
    pub s_margin: f64,
    pub xi_pd_min_eigs: Vec<f64>,
    /// `(2 − γ) − Σξ_i`.
    pub xi_sum_slack: f64,
    /// `1 − μ_s`.
    pub mu_margin: Option<f64>,
    /// `1 − σ`.
    pub sigma_margin: Option<f64>,
    /// `α − 2Ls`.
    pub alpha_2ls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub rho: f64,
    pub gamma: f64,
    pub policy: ProximalPolicy,
    #[serde(default)]
    pub seed: Option<u64>,
    pub constants: ProblemConstants,
    pub s_bar: f64,
    pub s: f64,
    pub xi: Vec<f64>,
    pub mu_s: Option<f64>,
    pub sigma: Option<f64>,
    pub c_a_clamped: bool,
    pub passed: bool,
    pub failures: Vec<Failure>,
    pub margins: Margins,
}

/// Evaluates every linear-convergence condition for `(ρ, γ, policy)` on `p`.
///
/// Fails only for invalid inputs (`γ ∉ (0, 2)`, bad proximal matrices);
/// unmet conditions are reported through `passed` and `failures`.
pub fn certify(
    p: &BlockProblem,
    rho: f64,
    gamma: f64,
    policy: &ProximalPolicy,
    options: &CertifyOptions,
) -> Result<Certificate> {
    check_gamma(gamma)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(CertError::InvalidInput(format!("rho must be positive, got {rho}")));
    }
    let p_list = policy.materialize_all(p, rho)?;
    let constants = estimate_constants_unchecked(p)?;
    let n = p.n_blocks();
    let uniform_xi = vec![(1.0 - XI_SHRINK) * (2.0 - gamma) / n as f64; n];
    let mut failures = Vec::new();

    if !(constants.alpha > options.alpha_floor) {
        failures.push(Failure::NotStronglyConvex {
            alpha: constants.alpha,
            floor: options.alpha_floor,
        });
        return Ok(Certificate {
            rho,
            gamma,
            policy: policy.clone(),
            seed: None,
            s_bar: 0.0,
            s: 0.0,
            margins: Margins {
                s_margin: 0.0,
                xi_pd_min_eigs: Vec::new(),
                xi_sum_slack: (2.0 - gamma) - uniform_xi.iter().sum::<f64>(),
                mu_margin: None,
                sigma_margin: None,
                alpha_2ls: constants.alpha,
            },
            xi: uniform_xi,
            mu_s: None,
            sigma: None,
            c_a_clamped: false,
            passed: false,
            failures,
            constants,
        });
    }

    let s_bar = max_feasible_s(&constants, rho, n)?;
    let s = 0.5 * s_bar;
    let alpha_2ls = constants.alpha - 2.0 * constants.l * s;
    debug_assert!(alpha_2ls > 0.0);

    let xi_check = check_xi_condition_with(p, rho, gamma, s, &p_list, options.xi_mode)?;
    for (block, &e) in xi_check.min_eigs.iter().enumerate() {
        if !(e > 0.0) {
            failures.push(Failure::XiCondition { block, min_eig: e });
        }
    }
    let xi_sum_slack = (2.0 - gamma) - xi_check.xi.iter().sum::<f64>();
    if !(xi_sum_slack > 0.0) {
        failures.push(Failure::XiBudget { slack: xi_sum_slack });
    }

    let mu_s = compute_mu_s(p, &constants, rho, s, &p_list)?;
    if !(mu_s > 0.0 && mu_s < 1.0) {
        failures.push(Failure::MuNotContractive { mu_s });
    }
    if constants.c_a <= 0.0 {
        failures.push(Failure::RankDeficient { c_a: constants.c_a });
    }
    let sigma = compute_sigma(gamma, rho, s, constants.c_a, mu_s);
    if !sigma.contractive {
        failures.push(Failure::SigmaNotContractive { sigma: sigma.sigma });
    }

    Ok(Certificate {
        rho,
        gamma,
        policy: policy.clone(),
        seed: None,
        s_bar,
        s,
        margins: Margins {
            s_margin: 1.0 - s / s_bar,
            xi_pd_min_eigs: xi_check.min_eigs,
            xi_sum_slack,
            mu_margin: Some(1.0 - mu_s),
            sigma_margin: Some(1.0 - sigma.sigma),
            alpha_2ls,
        },
        xi: xi_check.xi,
        mu_s: Some(mu_s),
        sigma: Some(sigma.sigma),
        c_a_clamped: sigma.clamped,
        passed: failures.is_empty(),
        failures,
        constants,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauKind {
    /// `P_i = τ_i I`.
    Standard,
    /// `P_i = τ_i I − ρA_iᵀA_i`.
    ProxLinear,
}

fn tau_matrix(kind: TauKind, ata: &DenseMatrix, rho: f64, tau: f64) -> DenseMatrix {
    match kind {
        TauKind::Standard => DenseMatrix::scaled_identity(ata.rows(), tau),
        TauKind::ProxLinear => ata.scale(-rho).add_diagonal(tau),
    }
}

/// Per-block `τ_i`: the smallest value satisfying the uniform-`ξ` condition
/// (located by bisection), times [`AUTO_TAU_FACTOR`]. When the scaled value
/// leaves the admissible window the bisection's feasible endpoint is kept.
pub fn auto_tau(p: &BlockProblem, rho: f64, gamma: f64, kind: TauKind) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(CertError::InvalidInput(format!("rho must be positive, got {rho}")));
    }
    let constants = estimate_constants(p)?;
    let n = p.n_blocks();
    let s = 0.5 * max_feasible_s(&constants, rho, n)?;
    let xi = (1.0 - XI_SHRINK) * (2.0 - gamma) / n as f64;
    p.blocks()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let ata = b.a.gram();
            let a_norm_sq = constants.a_norms[i] * constants.a_norms[i];
            let margin = |tau: f64| xi_min_eig(&ata, &tau_matrix(kind, &ata, rho, tau), rho, s, xi);
            let floor = match kind {
                TauKind::Standard => 0.0,
                TauKind::ProxLinear => rho * a_norm_sq,
            };
            // scan upward for a feasible point, growing geometrically
            let mut lo = floor;
            let mut hi = floor.max(rho * a_norm_sq * 1e-3).max(1e-12);
            let mut found = false;
            for _ in 0..400 {
                if margin(hi)? > 0.0 {
                    found = true;
                    break;
                }
                lo = hi;
                hi *= 1.25;
                if !hi.is_finite() {
                    break;
                }
            }
            if !found {
                return Err(CertError::NoAdmissibleTau { block: i });
            }
            if lo > floor || margin(lo)? <= 0.0 {
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if margin(mid)? > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo <= 1e-12 * hi {
                        break;
                    }
                }
            }
            let scaled = AUTO_TAU_FACTOR * hi;
            Ok(if margin(scaled)? > 0.0 { scaled } else { hi })
        })
        .collect()
}

/// [`auto_tau`] wrapped in the matching policy.
pub fn auto_tau_policy(p: &BlockProblem, rho: f64, gamma: f64, kind: TauKind) -> Result<ProximalPolicy> {
    let tau = auto_tau(p, rho, gamma, kind)?;
    Ok(match kind {
        TauKind::Standard => ProximalPolicy::StandardProximal { tau },
        TauKind::ProxLinear => ProximalPolicy::ProxLinear { tau },
    })
}
