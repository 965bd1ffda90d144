#![allow(clippy::needless_range_loop)]

use jprox::linalg::{
    generalized_max_eigenvalue, max_eigenvalue_sym, min_eigenvalue_sym, smallest_singular_value_stacked, solve_spd,
    spectral_norm, symmetric_eigen, DenseMatrix, DenseVector,
};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-2.0..2.0f64, rows * cols).prop_map(move |d| DenseMatrix::new(rows, cols, d).unwrap())
}

fn spd(n: usize) -> impl Strategy<Value = DenseMatrix> {
    matrix(n, n).prop_map(|b| b.gram().add_diagonal(0.5))
}

fn sym(n: usize) -> impl Strategy<Value = DenseMatrix> {
    matrix(n, n).prop_map(|b| b.symmetrized())
}

/// Cyclic Jacobi rotations; eigenvalues sorted ascending.
fn jacobi_eigenvalues(s: &DenseMatrix) -> Vec<f64> {
    let n = s.rows();
    let mut a = s.to_rows();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn eigen_matches_jacobi_rotation_oracle() {
    let s = DenseMatrix::from_rows(&[
        vec![4.0, 1.0, -2.0, 0.5],
        vec![1.0, 3.0, 0.0, 1.0],
        vec![-2.0, 0.0, 5.0, -1.0],
        vec![0.5, 1.0, -1.0, 2.0],
    ])
    .unwrap();
    let mut ours = symmetric_eigen(&s).unwrap().values;
    ours.sort_by(f64::total_cmp);
    for (a, b) in ours.iter().zip(jacobi_eigenvalues(&s)) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn two_by_two_closed_form() {
    // eigenvalues of [[a, b], [b, d]]: (a+d)/2 ± sqrt(((a−d)/2)² + b²)
    let (a, b, d) = (3.0, 2.0, -1.0);
    let s = DenseMatrix::from_rows(&[vec![a, b], vec![b, d]]).unwrap();
    let r = (((a - d) / 2.0_f64).powi(2) + b * b).sqrt();
    assert!((max_eigenvalue_sym(&s).unwrap() - ((a + d) / 2.0 + r)).abs() < 1e-13);
    assert!((min_eigenvalue_sym(&s).unwrap() - ((a + d) / 2.0 - r)).abs() < 1e-13);
}

#[test]
fn spectral_norm_matches_power_iteration() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![-1.0, 0.5, 3.0]]).unwrap();
    let g = a.gram();
    let mut v = DenseVector::from_vec(vec![1.0, 1.0, 1.0]);
    for _ in 0..500 {
        let w = g.matvec(v.as_slice());
        v = w.scale(1.0 / w.norm());
    }
    let oracle = g.quadratic_form(v.as_slice()).sqrt();
    assert!((spectral_norm(&a).unwrap() - oracle).abs() < 1e-10);
}

#[test]
fn generalized_eigenvalue_of_diagonal_pair() {
    let m = DenseMatrix::diag(&[1.0, 6.0, 2.0]);
    let n = DenseMatrix::diag(&[2.0, 3.0, 4.0]);
    assert!((generalized_max_eigenvalue(&m, &n).unwrap() - 2.0).abs() < 1e-13);
}

#[test]
fn stacked_singular_value_of_identity_blocks() {
    let blocks = vec![DenseMatrix::identity(3), DenseMatrix::scaled_identity(3, 2.0)];
    // stack [I; 2I] has singular values sqrt(1 + 4)
    assert!((smallest_singular_value_stacked(&blocks).unwrap() - 5.0_f64.sqrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn spd_solve_residual(m in spd(6), b in prop::collection::vec(-10.0..10.0f64, 6)) {
        let b = DenseVector::from_vec(b);
        let x = solve_spd(&m, &b).unwrap();
        let r = m.matvec(x.as_slice()).sub(&b).norm();
        prop_assert!(r <= 1e-10 * (1.0 + b.norm()));
    }

    #[test]
    fn stacked_singular_value_squared_is_min_eigenvalue(
        a1 in matrix(4, 3), a2 in matrix(4, 2), a3 in matrix(4, 2),
    ) {
        let blocks = vec![a1, a2, a3];
        let c = smallest_singular_value_stacked(&blocks).unwrap();
        let mut sum = DenseMatrix::zeros(4, 4);
        for a in &blocks {
            sum = sum.add(&a.outer_gram()).unwrap();
        }
        let lmin = min_eigenvalue_sym(&sum).unwrap();
        prop_assert!((c * c - lmin).abs() <= 1e-8 * lmin.abs().max(1.0));
    }

    #[test]
    fn generalized_eigenvalue_is_congruence_invariant(m in sym(4), n in spd(4), c in matrix(4, 4)) {
        let c = c.add_diagonal(3.0);
        let ct = c.transpose();
        let m2 = ct.matmul(&m).unwrap().matmul(&c).unwrap().symmetrized();
        let n2 = ct.matmul(&n).unwrap().matmul(&c).unwrap().symmetrized();
        let a = generalized_max_eigenvalue(&m, &n).unwrap();
        let b = generalized_max_eigenvalue(&m2, &n2).unwrap();
        prop_assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn spectral_norm_of_transpose(a in matrix(5, 3)) {
        let x = spectral_norm(&a).unwrap();
        let y = spectral_norm(&a.transpose()).unwrap();
        prop_assert!((x - y).abs() <= 1e-10 * x.max(1.0));
    }

    #[test]
    fn eigenvalues_agree_with_rotation_oracle(s in sym(5)) {
        let mut ours = symmetric_eigen(&s).unwrap().values;
        ours.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(jacobi_eigenvalues(&s)) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
