//! Block subproblem solvers.
//!
//! Every solver minimizes
//!
//! ```text
//! f_i(x) − ⟨λ, A_i x⟩ + (κ/2)‖A_i x + g_{−i} − c‖² + ½‖x − x_i^k‖²_{P_i}
//! ```
//!
//! where `κ = ρ` for the ADMM family and `κ = 0` (with `P_i = 0`) for dual
//! decomposition.

use crate::linalg::{Cholesky, DenseMatrix, DenseVector};
use crate::problem::{GenericSmooth, LogisticQuadBlock, QuadraticBlock};

use super::{Result, SolveError};

/// Doublings allowed while searching for a sign change.
pub const MAX_BRACKET_DOUBLINGS: usize = 60;

/// Iteration cap of the gradient method used for generic blocks.
pub const GENERIC_MAX_ITERS: usize = 200_000;

/// `A_iᵀλ − q_i − κA_iᵀ(g_{−i} − c) + P_i x_i^k`, the right-hand side of the
/// quadratic block optimality system.
#[allow(clippy::too_many_arguments)]
pub fn quadratic_rhs(
    block: &QuadraticBlock,
    a: &DenseMatrix,
    p: &DenseMatrix,
    penalty: f64,
    lambda: &DenseVector,
    g_minus: &DenseVector,
    c: &DenseVector,
    x_k: &DenseVector,
) -> DenseVector {
    let shifted = lambda.sub(&g_minus.sub(c).scale(penalty));
    let mut rhs = a.tr_matvec(shifted.as_slice()).sub(block.q());
    rhs.axpy(1.0, &p.matvec(x_k.as_slice()));
    rhs
}

/// `H_i + κA_iᵀA_i + P_i`.
pub fn quadratic_system(block: &QuadraticBlock, a: &DenseMatrix, p: &DenseMatrix, penalty: f64) -> Result<DenseMatrix> {
    let mut m = block.h().add(p)?;
    if penalty != 0.0 {
        m = m.add(&a.gram().scale(penalty))?;
    }
    Ok(m)
}

/// Exact minimizer of the quadratic block subproblem:
/// `(H_i + ρA_iᵀA_i + P_i)x = A_iᵀλ^k − q_i − ρA_iᵀ(g_{−i} − c) + P_i x_i^k`.
#[allow(clippy::too_many_arguments)]
pub fn solve_block_quadratic(
    block: &QuadraticBlock,
    a: &DenseMatrix,
    p: &DenseMatrix,
    rho: f64,
    lambda: &DenseVector,
    g_minus: &DenseVector,
    c: &DenseVector,
    x_k: &DenseVector,
) -> Result<DenseVector> {
    let chol = Cholesky::factor(&quadratic_system(block, a, p, rho)?)?;
    Ok(chol.solve(&quadratic_rhs(block, a, p, rho, lambda, g_minus, c, x_k)))
}

/// Root of a strictly increasing scalar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRoot {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton's method with a bisection safeguard for a strictly increasing
/// `h`, given as `x ↦ (h(x), h'(x))`.
///
/// A bracket is found by doubling outward from `x0`; Newton steps that leave
/// the bracket are replaced by bisection. Stops at `|h| ≤ tol` or once `x`
/// cannot move by more than a few ulps; the achieved `|h|` is reported.
pub fn newton_bisect_increasing(
    h: impl Fn(f64) -> (f64, f64),
    x0: f64,
    tol: f64,
    max_iters: usize,
) -> Result<ScalarRoot> {
    if !x0.is_finite() {
        return Err(SolveError::NoBracket { x0 });
    }
    let (h0, d0) = h(x0);
    if !h0.is_finite() {
        return Err(SolveError::NoBracket { x0 });
    }
    if h0.abs() <= tol {
        return Ok(ScalarRoot {
            x: x0,
            residual: h0.abs(),
            iterations: 0,
        });
    }

    // Root lies left of x0 when h(x0) > 0.
    let dir = if h0 > 0.0 { -1.0 } else { 1.0 };
    let newton_dist = if d0 > 0.0 { h0.abs() / d0 } else { 0.0 };
    let mut step = newton_dist.max(1e-8 * (1.0 + x0.abs()));
    let (mut lo, mut hi) = (x0, x0);
    let mut bracketed = false;
    for _ in 0..=MAX_BRACKET_DOUBLINGS {
        let x = x0 + dir * step;
        let (hx, _) = h(x);
        if !hx.is_finite() {
            break;
        }
        if hx.abs() <= tol {
            return Ok(ScalarRoot {
                x,
                residual: hx.abs(),
                iterations: 0,
            });
        }
        if (hx > 0.0) != (h0 > 0.0) {
            if dir > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            bracketed = true;
            break;
        }
        // no sign change yet: the far point becomes the near end
        if dir > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        step *= 2.0;
    }
    if !bracketed {
        return Err(SolveError::NoBracket { x0 });
    }

    // Invariant: h(lo) < 0 < h(hi).
    let mut x = if dir > 0.0 { lo } else { hi };
    let mut best = ScalarRoot {
        x,
        residual: f64::INFINITY,
        iterations: 0,
    };
    for it in 1..=max_iters {
        let (hx, dx) = h(x);
        if hx.abs() < best.residual {
            best = ScalarRoot {
                x,
                residual: hx.abs(),
                iterations: it,
            };
        }
        if hx.abs() <= tol {
            return Ok(best);
        }
        if hx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket collapsed to adjacent floats: nothing left to resolve
            return Ok(best);
        }
        let newton = x - hx / dx;
        if (newton - x).abs() <= 4.0 * f64::EPSILON * x.abs() {
            // step below the resolution of x; the residual is rounding noise
            return Ok(best);
        }
        x = if dx > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            mid
        };
    }
    Err(SolveError::MaxItersExceeded {
        iterations: max_iters,
        residual: best.residual,
    })
}

/// Scalar logistic-quadratic subproblem with a general column `A_i`:
/// solves `f'(x) + κ x + β = 0` where `κ = penalty‖A_i‖² + P` and
/// `β = A_iᵀ(penalty(g_{−i} − c) − λ) − P x_k`.
pub fn solve_logistic_subproblem(
    block: &LogisticQuadBlock,
    curvature: f64,
    offset: f64,
    x0: f64,
    tol: f64,
    max_iters: usize,
) -> Result<ScalarRoot> {
    newton_bisect_increasing(
        |x| {
            (
                block.derivative(x) + curvature * x + offset,
                block.second_derivative(x) + curvature,
            )
        },
        x0,
        tol,
        max_iters,
    )
}

/// The scalar subproblem with `A_i = (1)` and `m = 1`. Returns `x` with
/// `|a(x−c_i) + b·σ(b(x−d_i)) + ρ(x + g_{−i} − c) − λ^k + P(x − x_k)| ≤ tol`.
#[allow(clippy::too_many_arguments)]
pub fn solve_block_scalar_newton(
    block: &LogisticQuadBlock,
    rho: f64,
    lambda: f64,
    g_minus: f64,
    c: f64,
    x_k: f64,
    p_scalar: f64,
    tol: f64,
    max_iters: usize,
) -> Result<f64> {
    if !(block.a + rho + p_scalar > 0.0) {
        return Err(SolveError::InvalidParams(format!(
            "scalar subproblem needs a + rho + P > 0, got {}",
            block.a + rho + p_scalar
        )));
    }
    let curvature = rho + p_scalar;
    let offset = rho * (g_minus - c) - lambda - p_scalar * x_k;
    Ok(solve_logistic_subproblem(block, curvature, offset, x_k, tol, max_iters)?.x)
}

/// Gradient method for a generic smooth block. Uses step `1/L_sub` with
/// `L_sub = L_i + κ‖A_i‖² + ‖P_i‖`; stops once the subproblem gradient norm
/// is at most `tol`.
#[allow(clippy::too_many_arguments)]
pub fn solve_generic_subproblem(
    block: &GenericSmooth,
    a: &DenseMatrix,
    p: &DenseMatrix,
    penalty: f64,
    lipschitz_bound: f64,
    lambda: &DenseVector,
    g_minus: &DenseVector,
    c: &DenseVector,
    x_k: &DenseVector,
    tol: f64,
) -> Result<(DenseVector, f64)> {
    let gradient = |x: &DenseVector| -> DenseVector {
        let mut r = a.matvec(x.as_slice()).add(g_minus).sub(c).scale(penalty);
        r.axpy(-1.0, lambda);
        let mut g = DenseVector::from_vec((block.gradient)(x.as_slice()));
        g.axpy(1.0, &a.tr_matvec(r.as_slice()));
        g.axpy(1.0, &p.matvec(x.sub(x_k).as_slice()));
        g
    };
    let step = 1.0 / lipschitz_bound;
    let mut x = x_k.clone();
    let mut g = gradient(&x);
    for _ in 0..GENERIC_MAX_ITERS {
        let norm = g.norm();
        if !norm.is_finite() {
            break;
        }
        if norm <= tol {
            return Ok((x, norm));
        }
        x.axpy(-step, &g);
        g = gradient(&x);
    }
    Err(SolveError::MaxItersExceeded {
        iterations: GENERIC_MAX_ITERS,
        residual: g.norm(),
    })
}
