//! The N-block linearly constrained problem
//!
//! ```text
//! minimize   Σ_i f_i(x_i)
//! subject to Σ_i A_i x_i = c
//! ```
//!
//! together with the optimality diagnostics used throughout the crate.

mod io;
mod objective;

pub use io::{BlockDocument, ProblemDocument};
pub use objective::{
    block_gradient, block_value, sigmoid, softplus, BlockObjective, GenericSmooth, GradientOracle, LogisticQuadBlock,
    QuadraticBlock, ValueOracle,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseMatrix, DenseVector, LinalgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("block objective is not strongly convex (lambda_min = {lambda_min:e})")]
    NotStronglyConvex { lambda_min: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("problem has no blocks")]
    NoBlocks,
    #[error("generic smooth blocks cannot be serialized")]
    Unserializable,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ProblemError>;

/// One block: objective `f_i` and its constraint matrix `A_i` (`m × n_i`).
#[derive(Debug, Clone)]
pub struct Block {
    pub objective: BlockObjective,
    pub a: DenseMatrix,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }
}

/// Immutable problem data. All `A_i` share row count `m = c.len()`.
#[derive(Debug, Clone)]
pub struct BlockProblem {
    blocks: Vec<Block>,
    c: DenseVector,
}

impl BlockProblem {
    pub fn new(blocks: Vec<Block>, c: DenseVector) -> Result<Self> {
        if blocks.is_empty() {
            return Err(ProblemError::NoBlocks);
        }
        if !c.is_finite() {
            return Err(ProblemError::NonFinite("c"));
        }
        for b in &blocks {
            if b.a.rows() != c.len() {
                return Err(ProblemError::DimensionMismatch {
                    what: "A_i rows",
                    expected: c.len(),
                    got: b.a.rows(),
                });
            }
            if b.a.cols() != b.dim() {
                return Err(ProblemError::DimensionMismatch {
                    what: "A_i columns",
                    expected: b.dim(),
                    got: b.a.cols(),
                });
            }
        }
        Ok(Self { blocks, c })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Number of coupling constraints.
    pub fn m(&self) -> usize {
        self.c.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Block {
        &self.blocks[i]
    }

    pub fn c(&self) -> &DenseVector {
        &self.c
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::dim).collect()
    }

    pub fn constraint_matrices(&self) -> Vec<DenseMatrix> {
        self.blocks.iter().map(|b| b.a.clone()).collect()
    }

    pub fn is_all_quadratic(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| matches!(b.objective, BlockObjective::Quadratic(_)))
    }

    pub fn check_primal(&self, x: &[DenseVector]) -> Result<()> {
        if x.len() != self.n_blocks() {
            return Err(ProblemError::DimensionMismatch {
                what: "block count",
                expected: self.n_blocks(),
                got: x.len(),
            });
        }
        for (b, xi) in self.blocks.iter().zip(x) {
            if xi.len() != b.dim() {
                return Err(ProblemError::DimensionMismatch {
                    what: "block length",
                    expected: b.dim(),
                    got: xi.len(),
                });
            }
        }
        Ok(())
    }

    pub fn check_point(&self, u: &PrimalDualPoint) -> Result<()> {
        self.check_primal(&u.x)?;
        if u.lambda.len() != self.m() {
            return Err(ProblemError::DimensionMismatch {
                what: "multiplier length",
                expected: self.m(),
                got: u.lambda.len(),
            });
        }
        Ok(())
    }

    /// `Σ_i A_i x_i`.
    pub fn aggregate(&self, x: &[DenseVector]) -> Result<DenseVector> {
        self.check_primal(x)?;
        let mut g = DenseVector::zeros(self.m());
        for (b, xi) in self.blocks.iter().zip(x) {
            g.axpy(1.0, &b.a.matvec(xi.as_slice()));
        }
        Ok(g)
    }
}

/// The iterate `u = (x_1, …, x_N; λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualPoint {
    pub x: Vec<DenseVector>,
    pub lambda: DenseVector,
}

impl PrimalDualPoint {
    pub fn new(x: Vec<DenseVector>, lambda: DenseVector) -> Self {
        Self { x, lambda }
    }

    pub fn zeros(p: &BlockProblem) -> Self {
        Self {
            x: p.block_dims().into_iter().map(DenseVector::zeros).collect(),
            lambda: DenseVector::zeros(p.m()),
        }
    }

    /// Euclidean norm of the stacked vector.
    pub fn norm(&self) -> f64 {
        (self.x.iter().map(DenseVector::norm_squared).sum::<f64>() + self.lambda.norm_squared()).sqrt()
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let xs = self
            .x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| a.sub(b).max_abs())
            .fold(0.0, f64::max);
        xs.max(self.lambda.sub(&other.lambda).max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(DenseVector::is_finite) && self.lambda.is_finite()
    }

    /// `max{‖x_1 − x_1*‖, …, ‖x_N − x_N*‖, ‖λ − λ*‖}`.
    pub fn dis(&self, reference: &Self) -> f64 {
        assert_eq!(self.x.len(), reference.x.len(), "block count mismatch");
        self.x
            .iter()
            .zip(&reference.x)
            .map(|(a, b)| a.sub(b).norm())
            .fold(self.lambda.sub(&reference.lambda).norm(), f64::max)
    }
}

/// `Σ_i A_i x_i − c`.
pub fn constraint_residual(p: &BlockProblem, x: &[DenseVector]) -> Result<DenseVector> {
    Ok(p.aggregate(x)?.sub(p.c()))
}

/// `max( max_i ‖∇f_i(x_i) − A_iᵀλ‖, ‖Σ_i A_i x_i − c‖ )`.
pub fn kkt_residual(p: &BlockProblem, u: &PrimalDualPoint) -> Result<f64> {
    p.check_point(u)?;
    let mut worst = constraint_residual(p, &u.x)?.norm();
    for (b, xi) in p.blocks().iter().zip(&u.x) {
        let g = b.objective.gradient(xi)?;
        let stat = g.sub(&b.a.tr_matvec(u.lambda.as_slice())).norm();
        worst = worst.max(stat);
    }
    Ok(worst)
}

/// `Σ f_i(x_i) − ⟨λ, Σ A_i x_i − c⟩ + (ρ/2)‖Σ A_i x_i − c‖²`.
pub fn augmented_lagrangian(p: &BlockProblem, u: &PrimalDualPoint, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(ProblemError::InvalidParameter(format!(
            "rho must be nonnegative, got {rho}"
        )));
    }
    p.check_point(u)?;
    let mut objective = 0.0;
    for (b, xi) in p.blocks().iter().zip(&u.x) {
        objective += b.objective.value(xi)?;
    }
    let r = constraint_residual(p, &u.x)?;
    Ok(objective - u.lambda.dot(&r) + 0.5 * rho * r.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::from_vec(x.to_vec())
    }

    fn scalar_quadratic() -> BlockObjective {
        BlockObjective::Quadratic(QuadraticBlock::new(DenseMatrix::identity(1), v(&[0.0])).unwrap())
    }

    fn two_scalar_blocks(c: f64) -> BlockProblem {
        let one = DenseMatrix::identity(1);
        BlockProblem::new(
            vec![
                Block {
                    objective: scalar_quadratic(),
                    a: one.clone(),
                },
                Block {
                    objective: scalar_quadratic(),
                    a: one,
                },
            ],
            v(&[c]),
        )
        .unwrap()
    }

    #[test]
    fn residual_arithmetic() {
        let p = two_scalar_blocks(4.0);
        assert_eq!(constraint_residual(&p, &[v(&[1.0]), v(&[2.0])]).unwrap(), v(&[-1.0]));
        let p0 = two_scalar_blocks(0.0);
        assert_eq!(constraint_residual(&p0, &[v(&[0.0]), v(&[0.0])]).unwrap(), v(&[0.0]));
    }

    #[test]
    fn kkt_zero_at_trivial_optimum() {
        let f = BlockObjective::Quadratic(QuadraticBlock::new(DenseMatrix::identity(3), v(&[0.0; 3])).unwrap());
        let p = BlockProblem::new(
            vec![Block {
                objective: f,
                a: DenseMatrix::identity(3),
            }],
            v(&[0.0; 3]),
        )
        .unwrap();
        assert_eq!(kkt_residual(&p, &PrimalDualPoint::zeros(&p)).unwrap(), 0.0);
    }

    #[test]
    fn augmented_lagrangian_cases() {
        let p = two_scalar_blocks(4.0);
        // feasible point: penalty and inner product vanish
        let u = PrimalDualPoint::new(vec![v(&[1.0]), v(&[3.0])], v(&[7.0]));
        assert_eq!(augmented_lagrangian(&p, &u, 5.0).unwrap(), 0.5 + 4.5);
        // λ = 0, ρ = 2 → Σf + r²
        let u = PrimalDualPoint::new(vec![v(&[1.0]), v(&[2.0])], v(&[0.0]));
        assert_eq!(augmented_lagrangian(&p, &u, 2.0).unwrap(), 0.5 + 2.0 + 1.0);
    }

    #[test]
    fn construction_validates_shapes() {
        let bad = BlockProblem::new(
            vec![Block {
                objective: scalar_quadratic(),
                a: DenseMatrix::identity(2),
            }],
            v(&[0.0, 0.0]),
        );
        assert!(matches!(
            bad,
            Err(ProblemError::DimensionMismatch {
                what: "A_i columns",
                ..
            })
        ));
        assert!(matches!(
            BlockProblem::new(vec![], v(&[0.0])),
            Err(ProblemError::NoBlocks)
        ));
        let p = two_scalar_blocks(0.0);
        let u = PrimalDualPoint::new(vec![v(&[0.0])], v(&[0.0]));
        assert!(kkt_residual(&p, &u).is_err());
    }
}
