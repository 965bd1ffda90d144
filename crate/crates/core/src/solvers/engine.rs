use std::time::Instant;

use rayon::prelude::*;

use crate::linalg::{spectral_norm, Cholesky, DenseMatrix, DenseVector};
use crate::problem::{BlockObjective, BlockProblem, PrimalDualPoint};

use super::subproblem::{quadratic_rhs, quadratic_system, solve_generic_subproblem, solve_logistic_subproblem};
use super::trace::{IterationRecord, Status, Trace};
use super::{DualDecompositionParams, Method, Result, SolveError, SolverParams};

/// `dis` (or `‖u‖` without a reference) above this marks a run as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Work estimate above which block subproblems are dispatched to the rayon pool.
const PARALLEL_WORK_THRESHOLD: usize = 20_000;

/// A scalar function of the iterate evaluated once per recorded iteration.
pub trait Potential {
    fn value(&self, u: &PrimalDualPoint) -> f64;
}

impl<F: Fn(&PrimalDualPoint) -> f64> Potential for F {
    fn value(&self, u: &PrimalDualPoint) -> f64 {
        self(u)
    }
}

enum Kernel {
    Quadratic(Cholesky),
    Logistic { curvature: f64, p_scalar: f64 },
    Generic { lipschitz_bound: f64 },
}

struct PreparedBlock {
    p: DenseMatrix,
    kernel: Kernel,
}

/// Iteration engine for one problem, method and parameter set.
///
/// Proximal matrices and the quadratic subproblem factorizations are formed
/// once at construction and reused by every step.
pub struct Solver<'p> {
    problem: &'p BlockProblem,
    params: SolverParams,
    method: Method,
    penalty: f64,
    gamma: f64,
    blocks: Vec<PreparedBlock>,
    parallel: bool,
}

impl<'p> Solver<'p> {
    pub fn new(problem: &'p BlockProblem, method: Method, params: SolverParams) -> Result<Self> {
        params.validate()?;
        let (penalty, gamma) = match method {
            Method::JacobiProximal => (params.rho, params.gamma),
            Method::JacobiPlain | Method::GaussSeidel => (params.rho, 1.0),
            Method::DualDecomposition(dd) => {
                dd.validate()?;
                (0.0, 1.0)
            }
        };
        let proximal = match method {
            Method::JacobiProximal => params.policy.materialize_all(problem, params.rho)?,
            _ => problem
                .blocks()
                .iter()
                .map(|b| DenseMatrix::zeros(b.dim(), b.dim()))
                .collect(),
        };
        let blocks = problem
            .blocks()
            .iter()
            .zip(proximal)
            .enumerate()
            .map(|(i, (b, p))| {
                let kernel = match &b.objective {
                    BlockObjective::Quadratic(q) => {
                        let system = quadratic_system(q, &b.a, &p, penalty)?;
                        Kernel::Quadratic(Cholesky::factor(&system).map_err(|e| SolveError::Subproblem {
                            block: i,
                            source: Box::new(e.into()),
                        })?)
                    }
                    BlockObjective::LogisticQuad(_) => {
                        let p_scalar = p.get(0, 0);
                        let col_norm_sq = b.a.gram().get(0, 0);
                        Kernel::Logistic {
                            curvature: penalty * col_norm_sq + p_scalar,
                            p_scalar,
                        }
                    }
                    BlockObjective::Generic(g) => {
                        let a_norm = spectral_norm(&b.a)?;
                        let p_norm = if p.max_abs() == 0.0 { 0.0 } else { spectral_norm(&p)? };
                        Kernel::Generic {
                            lipschitz_bound: g.lipschitz + penalty * a_norm * a_norm + p_norm,
                        }
                    }
                };
                Ok(PreparedBlock { p, kernel })
            })
            .collect::<Result<Vec<_>>>()?;
        let work: usize = problem.block_dims().iter().map(|n| n * (n + problem.m())).sum();
        Ok(Self {
            problem,
            params,
            method,
            penalty,
            gamma,
            blocks,
            parallel: problem.n_blocks() > 1 && work >= PARALLEL_WORK_THRESHOLD,
        })
    }

    /// Force block subproblems onto (or off) the rayon pool.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// The materialized proximal matrices `P_i` (zero for the baselines).
    pub fn proximal_matrices(&self) -> Vec<DenseMatrix> {
        self.blocks.iter().map(|b| b.p.clone()).collect()
    }

    /// Minimizer of block `i`'s subproblem at multiplier `lambda`, with
    /// `g_minus = Σ_{j≠i} A_j x_j` and previous block value `x_k`. Returns the
    /// block and the achieved optimality residual (0 for exact solves).
    fn solve_block(
        &self,
        i: usize,
        lambda: &DenseVector,
        g_minus: &DenseVector,
        x_k: &DenseVector,
    ) -> Result<(DenseVector, f64)> {
        let block = self.problem.block(i);
        let prepared = &self.blocks[i];
        let c = self.problem.c();
        let wrap = |e: SolveError| SolveError::Subproblem {
            block: i,
            source: Box::new(e),
        };
        match (&block.objective, &prepared.kernel) {
            (BlockObjective::Quadratic(q), Kernel::Quadratic(chol)) => {
                let rhs = quadratic_rhs(q, &block.a, &prepared.p, self.penalty, lambda, g_minus, c, x_k);
                Ok((chol.solve(&rhs), 0.0))
            }
            (BlockObjective::LogisticQuad(l), Kernel::Logistic { curvature, p_scalar }) => {
                let shifted = g_minus.sub(c).scale(self.penalty).sub(lambda);
                let offset = block.a.tr_matvec(shifted.as_slice())[0] - p_scalar * x_k[0];
                let root = solve_logistic_subproblem(
                    l,
                    *curvature,
                    offset,
                    x_k[0],
                    self.params.newton_tol,
                    self.params.newton_max_iters,
                )
                .map_err(wrap)?;
                Ok((DenseVector::from_vec(vec![root.x]), root.residual))
            }
            (BlockObjective::Generic(g), Kernel::Generic { lipschitz_bound }) => solve_generic_subproblem(
                g,
                &block.a,
                &prepared.p,
                self.penalty,
                *lipschitz_bound,
                lambda,
                g_minus,
                c,
                x_k,
                self.params.newton_tol,
            )
            .map_err(wrap),
            _ => unreachable!("kernel prepared for a different block type"),
        }
    }

    /// One iteration from `u` (iteration index `k` only matters for the
    /// dual-decomposition step schedule).
    pub fn step(&self, u: &PrimalDualPoint, k: usize) -> Result<PrimalDualPoint> {
        Ok(self.step_detailed(u, k)?.0)
    }

    /// Like [`Solver::step`], also returning the largest block residual.
    pub fn step_detailed(&self, u: &PrimalDualPoint, k: usize) -> Result<(PrimalDualPoint, f64)> {
        match self.method {
            Method::GaussSeidel => self.gauss_seidel(u, &identity_order(self.problem.n_blocks())),
            _ => self.jacobi(u, k, None),
        }
    }

    /// One Jacobi-type iteration computing the blocks in the given order.
    /// The result does not depend on `order`.
    pub fn step_with_order(&self, u: &PrimalDualPoint, k: usize, order: &[usize]) -> Result<PrimalDualPoint> {
        check_order(order, self.problem.n_blocks())?;
        let out = match self.method {
            Method::GaussSeidel => self.gauss_seidel(u, order)?,
            _ => self.jacobi(u, k, Some(order))?,
        };
        Ok(out.0)
    }

    fn jacobi(&self, u: &PrimalDualPoint, k: usize, order: Option<&[usize]>) -> Result<(PrimalDualPoint, f64)> {
        self.problem.check_point(u)?;
        let n = self.problem.n_blocks();
        // g^k = Σ_j A_j x_j^k, read-only for every block
        let aggregate = self.problem.aggregate(&u.x)?;
        let solve = |i: usize| {
            let own = self.problem.block(i).a.matvec(u.x[i].as_slice());
            self.solve_block(i, &u.lambda, &aggregate.sub(&own), &u.x[i])
        };
        let solved: Vec<(DenseVector, f64)> = match order {
            Some(order) => {
                let mut slots: Vec<Option<(DenseVector, f64)>> = vec![None; n];
                for &i in order {
                    slots[i] = Some(solve(i)?);
                }
                slots
                    .into_iter()
                    .map(|s| s.expect("permutation covers all blocks"))
                    .collect()
            }
            None if self.parallel => (0..n).into_par_iter().map(solve).collect::<Result<_>>()?,
            None => (0..n).map(solve).collect::<Result<_>>()?,
        };
        let max_residual = solved.iter().fold(0.0_f64, |m, (_, r)| m.max(*r));
        let x: Vec<DenseVector> = solved.into_iter().map(|(x, _)| x).collect();
        let step = match self.method {
            Method::DualDecomposition(dd) => dd.step_size(k),
            _ => self.gamma * self.params.rho,
        };
        let lambda = self.dual_update(&u.lambda, &x, step)?;
        Ok((PrimalDualPoint { x, lambda }, max_residual))
    }

    fn gauss_seidel(&self, u: &PrimalDualPoint, order: &[usize]) -> Result<(PrimalDualPoint, f64)> {
        self.problem.check_point(u)?;
        let mut x = u.x.clone();
        let mut running = self.problem.aggregate(&u.x)?;
        let mut max_residual: f64 = 0.0;
        for &i in order {
            let a = &self.problem.block(i).a;
            let g_minus = running.sub(&a.matvec(u.x[i].as_slice()));
            let (xi, r) = self.solve_block(i, &u.lambda, &g_minus, &u.x[i])?;
            running = g_minus.add(&a.matvec(xi.as_slice()));
            max_residual = max_residual.max(r);
            x[i] = xi;
        }
        let lambda = self.dual_update(&u.lambda, &x, self.params.rho)?;
        Ok((PrimalDualPoint { x, lambda }, max_residual))
    }

    /// `λ − step·(Σ A_i x_i − c)`.
    fn dual_update(&self, lambda: &DenseVector, x: &[DenseVector], step: f64) -> Result<DenseVector> {
        let r = crate::problem::constraint_residual(self.problem, x)?;
        Ok(lambda.sub(&r.scale(step)))
    }

    /// `count` iterates starting from (and including) `u0`.
    pub fn iterates(&self, u0: &PrimalDualPoint, count: usize) -> Result<Vec<PrimalDualPoint>> {
        let mut out = Vec::with_capacity(count + 1);
        out.push(u0.clone());
        for k in 0..count {
            let next = self.step(&out[k], k)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Iterate until `dis(u^k, reference) ≤ dis_tol`, `max_iters` steps, or
    /// divergence, recording one row per iterate including `u^0`.
    pub fn run(
        &self,
        u0: &PrimalDualPoint,
        reference: Option<&PrimalDualPoint>,
        potential: Option<&dyn Potential>,
    ) -> Result<Trace> {
        self.problem.check_point(u0)?;
        if let Some(r) = reference {
            self.problem.check_point(r)?;
        }
        let start = Instant::now();
        let mut u = u0.clone();
        let mut records = Vec::new();
        let mut max_subproblem_residual: f64 = 0.0;
        let mut k = 0;
        let status = loop {
            let dis = reference.map(|r| u.dis(r));
            let phi = potential.map(|p| p.value(&u));
            let primal_residual_norm = crate::problem::constraint_residual(self.problem, &u.x)?.norm();
            records.push(IterationRecord {
                k,
                dis,
                phi,
                primal_residual_norm,
                elapsed: start.elapsed(),
            });
            let size = dis.unwrap_or_else(|| u.norm());
            if !size.is_finite() || !primal_residual_norm.is_finite() || size > DIVERGENCE_THRESHOLD {
                break Status::Diverged;
            }
            if dis.is_some_and(|d| d <= self.params.dis_tol) {
                break Status::Converged;
            }
            if k >= self.params.max_iters {
                break Status::MaxIters;
            }
            let (next, r) = self.step_detailed(&u, k)?;
            max_subproblem_residual = max_subproblem_residual.max(r);
            u = next;
            k += 1;
        };
        Ok(Trace {
            records,
            status,
            max_subproblem_residual,
            final_point: u,
        })
    }
}

fn identity_order(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(SolveError::InvalidParams(format!(
                "block order {order:?} is not a permutation of 0..{n}"
            )));
        }
        seen[i] = true;
    }
    if order.len() != n {
        return Err(SolveError::InvalidParams(format!(
            "block order {order:?} is not a permutation of 0..{n}"
        )));
    }
    Ok(())
}

/// One Jacobi-Proximal iteration.
pub fn jacobi_proximal_step(p: &BlockProblem, u: &PrimalDualPoint, params: &SolverParams) -> Result<PrimalDualPoint> {
    Solver::new(p, Method::JacobiProximal, params.clone())?.step(u, 0)
}

/// One Jacobi-Proximal iteration with blocks computed in `order`.
pub fn jacobi_proximal_step_ordered(
    p: &BlockProblem,
    u: &PrimalDualPoint,
    params: &SolverParams,
    order: &[usize],
) -> Result<PrimalDualPoint> {
    Solver::new(p, Method::JacobiProximal, params.clone())?.step_with_order(u, 0, order)
}

/// One plain Jacobi ADMM iteration (`P_i = 0`, `γ = 1`).
pub fn jacobi_plain_step(p: &BlockProblem, u: &PrimalDualPoint, params: &SolverParams) -> Result<PrimalDualPoint> {
    Solver::new(p, Method::JacobiPlain, params.clone())?.step(u, 0)
}

/// One Gauss-Seidel ADMM iteration in block order `0..N`.
pub fn gauss_seidel_step(p: &BlockProblem, u: &PrimalDualPoint, params: &SolverParams) -> Result<PrimalDualPoint> {
    Solver::new(p, Method::GaussSeidel, params.clone())?.step(u, 0)
}

/// One Gauss-Seidel ADMM iteration sweeping the blocks in `order`.
pub fn gauss_seidel_step_ordered(
    p: &BlockProblem,
    u: &PrimalDualPoint,
    params: &SolverParams,
    order: &[usize],
) -> Result<PrimalDualPoint> {
    Solver::new(p, Method::GaussSeidel, params.clone())?.step_with_order(u, 0, order)
}

/// One dual-decomposition (dual ascent) iteration with step `α_k`.
pub fn dual_decomposition_step(
    p: &BlockProblem,
    u: &PrimalDualPoint,
    k: usize,
    dd: DualDecompositionParams,
) -> Result<PrimalDualPoint> {
    Solver::new(p, Method::DualDecomposition(dd), SolverParams::default())?.step(u, k)
}

/// Run the Jacobi-Proximal engine from `u0`.
pub fn run(
    p: &BlockProblem,
    params: &SolverParams,
    u0: &PrimalDualPoint,
    reference: Option<&PrimalDualPoint>,
    potential: Option<&dyn Potential>,
) -> Result<Trace> {
    Solver::new(p, Method::JacobiProximal, params.clone())?.run(u0, reference, potential)
}
