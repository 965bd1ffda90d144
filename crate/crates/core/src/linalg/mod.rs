//! Dense matrix primitives.
//!
//! Row-major [`DenseMatrix`] and [`DenseVector`] types plus the handful of
//! factorizations and spectral quantities the solver and the certification
//! engine need: SPD solves, extremal eigenvalues, singular values of stacked
//! constraint blocks and generalized eigenvalues of symmetric pencils.
//!
//! Everything here is a pure function of its inputs. Sizes are expected to be
//! at most a few hundred, so all spectral routines use full dense
//! decompositions.

mod cholesky;
mod dense;
mod spectral;

pub use cholesky::{solve_spd, Cholesky};
pub use dense::{DenseMatrix, DenseVector};
pub use spectral::{
    generalized_max_eigenvalue, max_eigenvalue_sym, min_eigenvalue_sym, smallest_singular_value_stacked, spectral_norm,
    symmetric_eigen, SymmetricEigen,
};

use thiserror::Error;

/// Relative tolerance used by every symmetry check in the crate.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Relative threshold below which a stacked singular value is treated as zero.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("stacked constraint matrix is rank deficient (c_A = {c_a:e}, threshold {threshold:e})")]
    RankDeficient { c_a: f64, threshold: f64 },
    #[error("data length mismatch: expected {expected}, got {got}")]
    InvalidData { expected: usize, got: usize },
    #[error("non-finite entry encountered")]
    NonFinite,
    #[error("empty matrix")]
    Empty,
}

pub type Result<T> = std::result::Result<T, LinalgError>;
