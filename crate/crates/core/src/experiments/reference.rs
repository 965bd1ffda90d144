use serde::{Deserialize, Serialize};

use crate::linalg::{Cholesky, DenseMatrix, DenseVector};
use crate::problem::{kkt_residual, BlockObjective, BlockProblem, PrimalDualPoint};
use crate::solvers::{Method, Solver, SolverParams, Status};

use super::{ExperimentError, Result};

/// Iterations of the engine used for references of non-quadratic problems.
pub const REFERENCE_ITERS: usize = 4000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub point: PrimalDualPoint,
    pub kkt_residual: f64,
    /// Obtained from a direct KKT solve rather than by iteration.
    pub exact: bool,
}

/// `max{‖x_i − x_i*‖, ‖λ − λ*‖}`.
pub fn dis_metric(u: &PrimalDualPoint, reference: &PrimalDualPoint) -> Result<f64> {
    if u.x.len() != reference.x.len() {
        return Err(ExperimentError::DimensionMismatch {
            what: "block count",
            expected: reference.x.len(),
            got: u.x.len(),
        });
    }
    for (a, b) in u.x.iter().zip(&reference.x) {
        if a.len() != b.len() {
            return Err(ExperimentError::DimensionMismatch {
                what: "block dimension",
                expected: b.len(),
                got: a.len(),
            });
        }
    }
    if u.lambda.len() != reference.lambda.len() {
        return Err(ExperimentError::DimensionMismatch {
            what: "multiplier",
            expected: reference.lambda.len(),
            got: u.lambda.len(),
        });
    }
    Ok(u.dis(reference))
}

/// KKT point of an all-quadratic problem through the Schur complement
/// `(Σ A_i H_i⁻¹ A_iᵀ)λ = c + Σ A_i H_i⁻¹ q_i`, `x_i = H_i⁻¹(A_iᵀλ − q_i)`.
pub fn solve_kkt(p: &BlockProblem) -> Result<PrimalDualPoint> {
    let m = p.m();
    let mut schur = DenseMatrix::zeros(m, m);
    let mut rhs = p.c().clone();
    let mut factors = Vec::with_capacity(p.n_blocks());
    for (i, b) in p.blocks().iter().enumerate() {
        let BlockObjective::Quadratic(q) = &b.objective else {
            return Err(ExperimentError::InvalidConfig(format!("block {i} is not quadratic")));
        };
        let chol = Cholesky::factor(q.h())?;
        // H⁻¹Aᵀ column by column
        let at = b.a.transpose();
        let mut hinv_at = DenseMatrix::zeros(b.dim(), m);
        for j in 0..m {
            let col: Vec<f64> = (0..b.dim()).map(|r| at.get(r, j)).collect();
            let sol = chol.solve(&DenseVector::from_vec(col));
            for r in 0..b.dim() {
                hinv_at.set(r, j, sol[r]);
            }
        }
        schur = schur.add(&b.a.matmul(&hinv_at)?)?;
        rhs.axpy(1.0, &b.a.matvec(chol.solve(q.q()).as_slice()));
        factors.push(chol);
    }
    let schur = schur.symmetrized();
    let chol = Cholesky::factor(&schur).map_err(|_| ExperimentError::SingularKkt)?;
    let lambda = chol.solve(&rhs);
    let x = p
        .blocks()
        .iter()
        .zip(&factors)
        .map(|(b, f)| {
            let BlockObjective::Quadratic(q) = &b.objective else {
                unreachable!()
            };
            f.solve(&b.a.tr_matvec(lambda.as_slice()).sub(q.q()))
        })
        .collect();
    let point = PrimalDualPoint::new(x, lambda);
    if !point.is_finite() {
        return Err(ExperimentError::SingularKkt);
    }
    Ok(point)
}

/// Exact KKT solve for all-quadratic problems; otherwise the Jacobi-Proximal
/// iterate after [`REFERENCE_ITERS`] steps from zero with `params`.
pub fn reference_solution(p: &BlockProblem, params: &SolverParams) -> Result<ReferenceSolution> {
    if p.is_all_quadratic() {
        let point = solve_kkt(p)?;
        return Ok(ReferenceSolution {
            kkt_residual: kkt_residual(p, &point)?,
            point,
            exact: true,
        });
    }
    let params = SolverParams {
        max_iters: REFERENCE_ITERS,
        ..params.clone()
    };
    let trace = Solver::new(p, Method::JacobiProximal, params)?.run(&PrimalDualPoint::zeros(p), None, None)?;
    if trace.status == Status::Diverged {
        return Err(ExperimentError::ReferenceDiverged);
    }
    let point = trace.final_point;
    Ok(ReferenceSolution {
        kkt_residual: kkt_residual(p, &point)?,
        point,
        exact: false,
    })
}
