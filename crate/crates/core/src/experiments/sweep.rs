use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certification::{
    auto_tau_policy, certify, fit_linear_rate, verify_contraction_series, CertError, Certificate, CertifyOptions,
    ContractionReport, Lyapunov, RateFit, TauKind,
};
use crate::linalg::spectral_norm;
use crate::problem::{BlockProblem, PrimalDualPoint};
use crate::solvers::{Method, Potential, ProximalPolicy, Solver, SolverParams, Trace};

use super::{ExperimentError, Result};

/// Tail fraction used for the per-cell rate fits.
pub const FIT_TAIL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub rho_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub max_iters: usize,
    pub seeds: Vec<u64>,
}

pub const GAMMA_GRID: [f64; 4] = [0.1, 0.5, 1.5, 1.9];
pub const RHO_GRID_SMALL: [f64; 4] = [0.03, 1.0, 5.0, 10.0];
pub const RHO_GRID_LARGE: [f64; 4] = [1e-5, 0.1, 5.0, 10.0];
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];
pub const DEFAULT_CELL_ITERS: usize = 4000;

impl SweepConfig {
    fn with_rho(rho: &[f64]) -> Self {
        Self {
            rho_grid: rho.to_vec(),
            gamma_grid: GAMMA_GRID.to_vec(),
            max_iters: DEFAULT_CELL_ITERS,
            seeds: DEFAULT_SEEDS.to_vec(),
        }
    }

    /// Grid for the 3-block quadratic family and for resource allocation.
    pub fn small() -> Self {
        Self::with_rho(&RHO_GRID_SMALL)
    }

    /// Grid for the 10-block quadratic family.
    pub fn large() -> Self {
        Self::with_rho(&RHO_GRID_LARGE)
    }

    /// The default grid for an `N`-block problem.
    pub fn for_blocks(n_blocks: usize) -> Self {
        if n_blocks >= 10 {
            Self::large()
        } else {
            Self::small()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho_grid.is_empty() || self.gamma_grid.is_empty() {
            return Err(ExperimentError::InvalidConfig("sweep grids must be nonempty".into()));
        }
        if self
            .rho_grid
            .iter()
            .chain(&self.gamma_grid)
            .any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return Err(ExperimentError::InvalidConfig("grid values must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(ExperimentError::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// How each cell's proximal matrices are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyChoice {
    Fixed(ProximalPolicy),
    /// Per-cell [`auto_tau_policy`].
    AutoTau(TauKind),
}

/// `τ_i = 1.5·ρ‖A_i‖²·N/(2 − γ)`, used when no `τ` satisfies the certificate's
/// condition. For prox-linear it is raised to at least `ρ‖A_i‖²`.
pub fn fallback_tau(p: &BlockProblem, rho: f64, gamma: f64, kind: TauKind) -> Result<Vec<f64>> {
    let n = p.n_blocks() as f64;
    let denom = (2.0 - gamma).max(1e-3);
    p.blocks()
        .iter()
        .map(|b| {
            let a2 = spectral_norm(&b.a)?.powi(2);
            let base = (1.5 * rho * a2 * n / denom).max(1e-12);
            Ok(match kind {
                TauKind::Standard => base,
                TauKind::ProxLinear => base.max(rho * a2),
            })
        })
        .collect()
}

/// The policy for one `(ρ, γ)`; the flag is set when the fallback `τ` was used.
pub fn resolve_policy(p: &BlockProblem, rho: f64, gamma: f64, choice: &PolicyChoice) -> Result<(ProximalPolicy, bool)> {
    match choice {
        PolicyChoice::Fixed(policy) => Ok((policy.clone(), false)),
        PolicyChoice::AutoTau(kind) => match auto_tau_policy(p, rho, gamma, *kind) {
            Ok(policy) => Ok((policy, false)),
            Err(
                CertError::NoAdmissibleTau { .. }
                | CertError::NotStronglyConvex { .. }
                | CertError::GammaOutOfRange { .. },
            ) => {
                let tau = fallback_tau(p, rho, gamma, *kind)?;
                let policy = match kind {
                    TauKind::Standard => ProximalPolicy::StandardProximal { tau },
                    TauKind::ProxLinear => ProximalPolicy::ProxLinear { tau },
                };
                Ok((policy, true))
            }
            Err(e) => Err(e.into()),
        },
    }
}

/// A problem with its reference solution.
#[derive(Debug, Clone)]
pub struct SweepInstance {
    pub problem: BlockProblem,
    pub reference: PrimalDualPoint,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub rho: f64,
    pub gamma: f64,
    pub seed: u64,
    pub policy: Option<ProximalPolicy>,
    pub tau_fallback: bool,
    pub certificate: Option<Certificate>,
    pub certificate_error: Option<String>,
    pub trace: Option<Trace>,
    pub dis_fit: Option<RateFit>,
    pub phi_fit: Option<RateFit>,
    pub contraction: Option<ContractionReport>,
    pub error: Option<String>,
}

impl SweepCell {
    fn empty(rho: f64, gamma: f64, seed: u64) -> Self {
        Self {
            rho,
            gamma,
            seed,
            policy: None,
            tau_fallback: false,
            certificate: None,
            certificate_error: None,
            trace: None,
            dis_fit: None,
            phi_fit: None,
            contraction: None,
            error: None,
        }
    }

    pub fn certified(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.passed)
    }

    /// Stable file stem for the cell's trace.
    pub fn stem(&self) -> String {
        format!("cell_rho{}_gamma{}_seed{}", self.rho, self.gamma, self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn get(&self, rho: f64, gamma: f64, seed: u64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.rho == rho && c.gamma == gamma && c.seed == seed)
    }
}

fn run_cell(
    inst: &SweepInstance,
    rho: f64,
    gamma: f64,
    max_iters: usize,
    choice: &PolicyChoice,
    u0: &PrimalDualPoint,
) -> SweepCell {
    let mut cell = SweepCell::empty(rho, gamma, inst.seed);
    let p = &inst.problem;
    let (policy, fallback) = match resolve_policy(p, rho, gamma, choice) {
        Ok(v) => v,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    cell.policy = Some(policy.clone());
    cell.tau_fallback = fallback;
    match certify(p, rho, gamma, &policy, &CertifyOptions::default()) {
        Ok(mut cert) => {
            cert.seed = Some(inst.seed);
            cell.certificate = Some(cert);
        }
        Err(e) => cell.certificate_error = Some(e.to_string()),
    }
    let lyapunov = match &cell.certificate {
        Some(cert) if cert.passed => match Lyapunov::from_certificate(p, cert, &inst.reference) {
            Ok(l) => Some(l),
            Err(e) => {
                cell.certificate_error = Some(e.to_string());
                None
            }
        },
        _ => None,
    };
    let params = SolverParams {
        max_iters,
        ..SolverParams::new(rho, gamma, policy)
    };
    let trace = Solver::new(p, Method::JacobiProximal, params).and_then(|s| {
        s.run(
            u0,
            Some(&inst.reference),
            lyapunov.as_ref().map(|l| l as &dyn Potential),
        )
    });
    match trace {
        Ok(trace) => {
            cell.dis_fit = fit_linear_rate(&trace.dis_series(), FIT_TAIL).ok();
            let phi = trace.phi_series();
            if let (Some(sigma), false) = (cell.certificate.as_ref().and_then(|c| c.sigma), phi.is_empty()) {
                cell.phi_fit = fit_linear_rate(&phi, FIT_TAIL).ok();
                cell.contraction = Some(verify_contraction_series(&phi, sigma));
            }
            cell.trace = Some(trace);
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Every `(ρ, γ, instance)` cell of `config`, run concurrently. Per-cell
/// failures are recorded on the cell. `u0` defaults to zero.
pub fn run_sweep(
    instances: &[SweepInstance],
    config: &SweepConfig,
    choice: &PolicyChoice,
    u0: Option<&PrimalDualPoint>,
) -> Result<SweepTable> {
    config.validate()?;
    let jobs: Vec<(usize, f64, f64)> = instances
        .iter()
        .enumerate()
        .flat_map(|(i, _)| {
            config
                .rho_grid
                .iter()
                .flat_map(move |&r| config.gamma_grid.iter().map(move |&g| (i, r, g)))
        })
        .collect();
    let cells = jobs
        .into_par_iter()
        .map(|(i, rho, gamma)| {
            let inst = &instances[i];
            let zero = PrimalDualPoint::zeros(&inst.problem);
            run_cell(inst, rho, gamma, config.max_iters, choice, u0.unwrap_or(&zero))
        })
        .collect();
    Ok(SweepTable { cells })
}
