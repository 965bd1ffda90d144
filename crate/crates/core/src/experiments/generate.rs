use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{smallest_singular_value_stacked, symmetric_eigen, DenseMatrix, DenseVector};
use crate::problem::{Block, BlockObjective, BlockProblem, LogisticQuadBlock, PrimalDualPoint, QuadraticBlock};

use super::{ExperimentError, Result};

/// Regeneration attempts for the constraint matrices.
pub const MAX_RANK_ATTEMPTS: usize = 20;

/// Required smallest singular value of the stacked `[A_1ᵀ; …; A_Nᵀ]`.
pub const STACK_RANK_TOL: f64 = 1e-8;

/// Shift added to reflected Hessian eigenvalues: `λ ↦ |λ| + 0.1`.
pub const HESSIAN_EIGEN_SHIFT: f64 = 0.1;

/// Random linearly constrained quadratic program with a known KKT point.
#[derive(Debug, Clone)]
pub struct LcqpInstance {
    pub problem: BlockProblem,
    pub xstar: Vec<DenseVector>,
    pub lambdastar: DenseVector,
    pub seed: u64,
    /// The PSD matrices drawn alongside the Hessians, usable as explicit
    /// proximal matrices.
    pub proximal: Vec<DenseMatrix>,
}

impl LcqpInstance {
    pub fn optimum(&self) -> PrimalDualPoint {
        PrimalDualPoint::new(self.xstar.clone(), self.lambdastar.clone())
    }
}

/// Scalar logistic-quadratic blocks coupled by `Σ x_i = 0`.
#[derive(Debug, Clone)]
pub struct ResourceAllocInstance {
    pub problem: BlockProblem,
    pub coefficients: Vec<LogisticQuadBlock>,
    pub seed: u64,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::new(rows, cols, data).expect("finite gaussian samples")
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DenseVector {
    DenseVector::from_vec((0..n).map(|_| rng.sample(StandardNormal)).collect())
}

/// `½(B + Bᵀ)` with its spectrum mapped through `f`.
fn symmetric_with_spectrum(rng: &mut ChaCha8Rng, n: usize, f: impl Fn(f64) -> f64) -> Result<DenseMatrix> {
    let b = gaussian_matrix(rng, n, n);
    let sym = b.symmetrized();
    Ok(symmetric_eigen(&sym)?.reconstruct_with(f).symmetrized())
}

/// Draws, in order: the `A_i` (redrawn until the stack has full column
/// rank), the PSD `P_i`, the PD `H_i`, then `x_i*` and `λ*`; finally sets
/// `q_i = −H_i x_i* + A_iᵀλ*` and `c = Σ A_i x_i*`.
pub fn generate_lcqp(n_blocks: usize, m: usize, n: usize, seed: u64) -> Result<LcqpInstance> {
    if n_blocks == 0 || m == 0 || n == 0 {
        return Err(ExperimentError::InvalidConfig(format!(
            "N, m and n must be at least 1, got N = {n_blocks}, m = {m}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a_list = None;
    for _ in 0..MAX_RANK_ATTEMPTS {
        let candidate: Vec<DenseMatrix> = (0..n_blocks).map(|_| gaussian_matrix(&mut rng, m, n)).collect();
        let ok = matches!(smallest_singular_value_stacked(&candidate), Ok(c) if c > STACK_RANK_TOL);
        if ok {
            a_list = Some(candidate);
            break;
        }
    }
    let a_list = a_list.ok_or(ExperimentError::DegenerateAfterRetries {
        attempts: MAX_RANK_ATTEMPTS,
    })?;
    let proximal = (0..n_blocks)
        .map(|_| symmetric_with_spectrum(&mut rng, n, |l| l.max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    let hessians = (0..n_blocks)
        .map(|_| symmetric_with_spectrum(&mut rng, n, |l| l.abs() + HESSIAN_EIGEN_SHIFT))
        .collect::<Result<Vec<_>>>()?;
    let xstar: Vec<DenseVector> = (0..n_blocks).map(|_| gaussian_vector(&mut rng, n)).collect();
    let lambdastar = gaussian_vector(&mut rng, m);

    let mut c = DenseVector::zeros(m);
    let mut blocks = Vec::with_capacity(n_blocks);
    for ((a, h), xs) in a_list.into_iter().zip(hessians).zip(&xstar) {
        let mut q = a.tr_matvec(lambdastar.as_slice());
        q.axpy(-1.0, &h.matvec(xs.as_slice()));
        c.axpy(1.0, &a.matvec(xs.as_slice()));
        blocks.push(Block {
            objective: BlockObjective::Quadratic(QuadraticBlock::new(h, q)?),
            a,
        });
    }
    Ok(LcqpInstance {
        problem: BlockProblem::new(blocks, c)?,
        xstar,
        lambdastar,
        seed,
        proximal,
    })
}

/// `f_i(x) = ½a_i(x − c_i)² + log(1 + exp(b_i(x − d_i)))` with
/// `a_i ~ U[0,2]`, `b_i ~ U[−2,2]`, `c_i, d_i ~ U[−10,10]`, drawn per block
/// in that order.
pub fn generate_resource_alloc(n_blocks: usize, seed: u64) -> Result<ResourceAllocInstance> {
    if n_blocks == 0 {
        return Err(ExperimentError::InvalidConfig("N must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefficients: Vec<LogisticQuadBlock> = (0..n_blocks)
        .map(|_| {
            let a = rng.gen_range(0.0..=2.0);
            let b = rng.gen_range(-2.0..=2.0);
            let c = rng.gen_range(-10.0..=10.0);
            let d = rng.gen_range(-10.0..=10.0);
            LogisticQuadBlock::new(a, b, c, d)
        })
        .collect::<std::result::Result<_, _>>()?;
    let blocks = coefficients
        .iter()
        .map(|&l| Block {
            objective: BlockObjective::LogisticQuad(l),
            a: DenseMatrix::identity(1),
        })
        .collect();
    Ok(ResourceAllocInstance {
        problem: BlockProblem::new(blocks, DenseVector::zeros(1))?,
        coefficients,
        seed,
    })
}
