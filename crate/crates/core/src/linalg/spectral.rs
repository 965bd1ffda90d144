use nalgebra::DMatrix;

use super::{Cholesky, DenseMatrix, LinalgError, Result, RANK_TOL};

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    /// `V diag(f(λ)) Vᵀ`, exactly symmetric.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for (k, w) in mapped.iter().enumerate() {
                    s += self.vectors.get(i, k) * w * self.vectors.get(j, k);
                }
                out.set(i, j, s);
                out.set(j, i, s);
            }
        }
        out
    }
}

pub fn symmetric_eigen(s: &DenseMatrix) -> Result<SymmetricEigen> {
    s.check_symmetric()?;
    if s.rows() == 0 {
        return Err(LinalgError::Empty);
    }
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(&s.symmetrized()));
    let n = s.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, col, eig.eigenvectors[(i, k)]);
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

fn symmetric_eigenvalues(s: &DenseMatrix) -> Result<Vec<f64>> {
    s.check_symmetric()?;
    if s.rows() == 0 {
        return Err(LinalgError::Empty);
    }
    let mut values: Vec<f64> = to_nalgebra(&s.symmetrized())
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `λ_min(S)` of a symmetric matrix.
pub fn min_eigenvalue_sym(s: &DenseMatrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(s)?[0])
}

/// `λ_max(S)` of a symmetric matrix.
pub fn max_eigenvalue_sym(s: &DenseMatrix) -> Result<f64> {
    Ok(*symmetric_eigenvalues(s)?.last().expect("nonempty"))
}

/// Largest singular value `‖A‖₂`.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(LinalgError::Empty);
    }
    let sv = to_nalgebra(a).singular_values();
    Ok(sv.iter().fold(0.0_f64, |m, v| m.max(*v)))
}

/// `c_A`: smallest singular value of the stacked `[A_1ᵀ; …; A_Nᵀ]`, i.e.
/// `min_{‖λ‖=1} (Σ‖A_iᵀλ‖²)^{1/2}`.
///
/// When fewer stacked rows than `m` exist the minimum is structurally zero.
/// Returns `RankDeficient` (carrying the computed value) when `c_A` falls
/// below `RANK_TOL·‖stack‖`.
pub fn smallest_singular_value_stacked(blocks: &[DenseMatrix]) -> Result<f64> {
    let m = blocks.first().map(DenseMatrix::rows).ok_or(LinalgError::Empty)?;
    if m == 0 {
        return Err(LinalgError::Empty);
    }
    let total: usize = blocks.iter().map(DenseMatrix::cols).sum();
    for b in blocks {
        if b.rows() != m {
            return Err(LinalgError::DimensionMismatch {
                op: "smallest_singular_value_stacked",
                expected: (m, b.cols()),
                got: b.shape(),
            });
        }
    }
    let mut stack = DMatrix::<f64>::zeros(total, m);
    let mut offset = 0;
    for b in blocks {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                stack[(offset + j, i)] = b.get(i, j);
            }
        }
        offset += b.cols();
    }
    let sv = stack.singular_values();
    let largest = sv.iter().fold(0.0_f64, |a, v| a.max(*v));
    let c_a = if total < m {
        0.0
    } else {
        sv.iter().fold(f64::INFINITY, |a, v| a.min(*v))
    };
    let threshold = RANK_TOL * largest;
    if c_a <= threshold {
        return Err(LinalgError::RankDeficient { c_a, threshold });
    }
    Ok(c_a)
}

/// Least `μ` with `M ⪯ μ·N`, i.e. `λ_max(N^{-1/2} M N^{-1/2})`.
pub fn generalized_max_eigenvalue(m: &DenseMatrix, npd: &DenseMatrix) -> Result<f64> {
    m.check_symmetric()?;
    if m.shape() != npd.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "generalized_max_eigenvalue",
            expected: npd.shape(),
            got: m.shape(),
        });
    }
    let chol = Cholesky::factor(npd)?;
    max_eigenvalue_sym(&chol.congruence_inverse(m)?)
}
