use super::{DenseMatrix, DenseVector, LinalgError, Result};

/// Lower-triangular Cholesky factor `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // row-major lower triangle, upper part zero
    l: Vec<f64>,
}

impl Cholesky {
    /// Factor a symmetric positive-definite matrix.
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        m.check_symmetric()?;
        let n = m.rows();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = m.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `L y = b` in place.
    pub fn forward_substitute(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "cholesky rhs length mismatch");
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solve `Lᵀ x = y` in place.
    pub fn backward_substitute(&self, y: &mut [f64]) {
        let n = self.n;
        assert_eq!(y.len(), n, "cholesky rhs length mismatch");
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.forward_substitute(b);
        self.backward_substitute(b);
    }

    pub fn solve(&self, b: &DenseVector) -> DenseVector {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    /// `L⁻¹ S L⁻ᵀ` for symmetric `S`, symmetrized to remove rounding skew.
    pub fn congruence_inverse(&self, s: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.n;
        if s.shape() != (n, n) {
            return Err(LinalgError::DimensionMismatch {
                op: "congruence_inverse",
                expected: (n, n),
                got: s.shape(),
            });
        }
        // Y = L⁻¹ S, column by column.
        let mut y = DenseMatrix::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = s.get(i, j);
            }
            self.forward_substitute(&mut col);
            for i in 0..n {
                y.set(i, j, col[i]);
            }
        }
        // C = L⁻¹ Yᵀ, since S L⁻ᵀ = (L⁻¹ S)ᵀ for symmetric S.
        let mut c = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                col[i] = y.get(j, i);
            }
            self.forward_substitute(&mut col);
            for i in 0..n {
                c.set(i, j, col[i]);
            }
        }
        Ok(c.symmetrized())
    }
}

/// Solve `M x = b` for symmetric positive-definite `M`.
pub fn solve_spd(m: &DenseMatrix, b: &DenseVector) -> Result<DenseVector> {
    if b.len() != m.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "solve_spd",
            expected: (m.rows(), 1),
            got: (b.len(), 1),
        });
    }
    Ok(Cholesky::factor(m)?.solve(b))
}
