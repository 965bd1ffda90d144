use std::fmt;
use std::sync::Arc;

use crate::linalg::{min_eigenvalue_sym, Cholesky, DenseMatrix, DenseVector};

use super::{ProblemError, Result};

/// `f(x) = ½ xᵀHx + qᵀx` with `H` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBlock {
    h: DenseMatrix,
    q: DenseVector,
}

impl QuadraticBlock {
    pub fn new(h: DenseMatrix, q: DenseVector) -> Result<Self> {
        h.check_symmetric()?;
        if h.rows() != q.len() {
            return Err(ProblemError::DimensionMismatch {
                what: "quadratic block q",
                expected: h.rows(),
                got: q.len(),
            });
        }
        if !q.is_finite() {
            return Err(ProblemError::NonFinite("quadratic block q"));
        }
        // Cholesky is the cheap PD test; the eigenvalue is only reported on failure.
        if Cholesky::factor(&h).is_err() {
            let lambda_min = min_eigenvalue_sym(&h)?;
            return Err(ProblemError::NotStronglyConvex { lambda_min });
        }
        Ok(Self { h, q })
    }

    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn q(&self) -> &DenseVector {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// Scalar block `f(x) = ½a(x − cshift)² + log(1 + exp(b(x − dshift)))`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogisticQuadBlock {
    pub a: f64,
    pub b: f64,
    pub cshift: f64,
    pub dshift: f64,
}

/// `log(1 + eᵗ)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Logistic sigmoid `1/(1 + e⁻ᵗ)` without overflow.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticQuadBlock {
    pub fn new(a: f64, b: f64, cshift: f64, dshift: f64) -> Result<Self> {
        if ![a, b, cshift, dshift].iter().all(|v| v.is_finite()) {
            return Err(ProblemError::NonFinite("logistic block coefficient"));
        }
        if a < 0.0 {
            return Err(ProblemError::InvalidParameter(format!(
                "logistic block needs a >= 0, got {a}"
            )));
        }
        Ok(Self { a, b, cshift, dshift })
    }

    pub fn value(&self, x: f64) -> f64 {
        let r = x - self.cshift;
        0.5 * self.a * r * r + softplus(self.b * (x - self.dshift))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.a * (x - self.cshift) + self.b * sigmoid(self.b * (x - self.dshift))
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let s = sigmoid(self.b * (x - self.dshift));
        self.a + self.b * self.b * s * (1.0 - s)
    }

    /// Global bound on the second derivative, `a + b²/4`.
    pub fn lipschitz(&self) -> f64 {
        self.a + 0.25 * self.b * self.b
    }
}

pub type ValueOracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientOracle = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A smooth block known only through oracles. Its Lipschitz constant and
/// strong-convexity modulus cannot be estimated and must be reported by the
/// caller (modulus in the `f(y) ≥ f(x) + ⟨∇f(x), y−x⟩ + α‖y−x‖²` convention).
#[derive(Clone)]
pub struct GenericSmooth {
    pub dim: usize,
    pub value: ValueOracle,
    pub gradient: GradientOracle,
    pub lipschitz: f64,
    pub modulus: f64,
}

impl fmt::Debug for GenericSmooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericSmooth")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("modulus", &self.modulus)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum BlockObjective {
    Quadratic(QuadraticBlock),
    LogisticQuad(LogisticQuadBlock),
    Generic(GenericSmooth),
}

impl BlockObjective {
    pub fn dim(&self) -> usize {
        match self {
            BlockObjective::Quadratic(q) => q.dim(),
            BlockObjective::LogisticQuad(_) => 1,
            BlockObjective::Generic(g) => g.dim,
        }
    }

    fn check_dim(&self, x: &DenseVector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(ProblemError::DimensionMismatch {
                what: "block argument",
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `f_i(x)`.
    pub fn value(&self, x: &DenseVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            BlockObjective::Quadratic(q) => 0.5 * q.h.quadratic_form(x.as_slice()) + q.q.dot(x),
            BlockObjective::LogisticQuad(l) => l.value(x[0]),
            BlockObjective::Generic(g) => (g.value)(x.as_slice()),
        })
    }

    /// `∇f_i(x)`.
    pub fn gradient(&self, x: &DenseVector) -> Result<DenseVector> {
        self.check_dim(x)?;
        Ok(match self {
            BlockObjective::Quadratic(q) => q.h.matvec(x.as_slice()).add(&q.q),
            BlockObjective::LogisticQuad(l) => DenseVector::from_vec(vec![l.derivative(x[0])]),
            BlockObjective::Generic(g) => {
                let grad = (g.gradient)(x.as_slice());
                if grad.len() != g.dim {
                    return Err(ProblemError::DimensionMismatch {
                        what: "generic gradient oracle output",
                        expected: g.dim,
                        got: grad.len(),
                    });
                }
                DenseVector::from_vec(grad)
            }
        })
    }
}

/// Free-function form of [`BlockObjective::value`].
pub fn block_value(f: &BlockObjective, x: &DenseVector) -> Result<f64> {
    f.value(x)
}

/// Free-function form of [`BlockObjective::gradient`].
pub fn block_gradient(f: &BlockObjective, x: &DenseVector) -> Result<DenseVector> {
    f.gradient(x)
}
