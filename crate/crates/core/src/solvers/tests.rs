use super::*;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::{Block, BlockObjective, BlockProblem, LogisticQuadBlock, PrimalDualPoint, QuadraticBlock};

fn v(x: &[f64]) -> DenseVector {
    DenseVector::from_vec(x.to_vec())
}

/// Two scalar quadratic blocks `½h_i x² + q_i x`, constraint `x_1 + x_2 = c`.
fn scalar_pair(h: [f64; 2], q: [f64; 2], c: f64) -> BlockProblem {
    let blocks = (0..2)
        .map(|i| Block {
            objective: BlockObjective::Quadratic(QuadraticBlock::new(DenseMatrix::diag(&[h[i]]), v(&[q[i]])).unwrap()),
            a: DenseMatrix::identity(1),
        })
        .collect();
    BlockProblem::new(blocks, v(&[c])).unwrap()
}

fn point(x: [f64; 2], lambda: f64) -> PrimalDualPoint {
    PrimalDualPoint::new(vec![v(&[x[0]]), v(&[x[1]])], v(&[lambda]))
}

#[test]
fn jacobi_step_matches_closed_form() {
    let (h, q, c) = ([2.0, 3.0], [1.0, -1.0], 0.5);
    let p = scalar_pair(h, q, c);
    let (rho, gamma, tau) = (1.5, 0.7, 0.4);
    let params = SolverParams::new(rho, gamma, ProximalPolicy::standard_uniform(tau, 2));
    let u = point([0.3, -0.2], 0.1);
    let next = jacobi_proximal_step(&p, &u, &params).unwrap();
    // (h + ρ + τ)x = λ − q − ρ(x_other − c) + τx_k
    let x0 = (0.1 - q[0] - rho * (-0.2 - c) + tau * 0.3) / (h[0] + rho + tau);
    let x1 = (0.1 - q[1] - rho * (0.3 - c) + tau * -0.2) / (h[1] + rho + tau);
    let lambda = 0.1 - gamma * rho * (x0 + x1 - c);
    assert!((next.x[0][0] - x0).abs() < 1e-14);
    assert!((next.x[1][0] - x1).abs() < 1e-14);
    assert!((next.lambda[0] - lambda).abs() < 1e-14);
}

#[test]
fn gauss_seidel_uses_fresh_values() {
    let (h, q, c) = ([2.0, 3.0], [1.0, -1.0], 0.5);
    let p = scalar_pair(h, q, c);
    let rho = 1.5;
    let u = point([0.3, -0.2], 0.1);
    let next = gauss_seidel_step(&p, &u, &SolverParams::new(rho, 1.0, ProximalPolicy::None)).unwrap();
    let x0 = (0.1 - q[0] - rho * (-0.2 - c)) / (h[0] + rho);
    let x1 = (0.1 - q[1] - rho * (x0 - c)) / (h[1] + rho);
    assert!((next.x[0][0] - x0).abs() < 1e-14);
    assert!((next.x[1][0] - x1).abs() < 1e-14);
    assert!((next.lambda[0] - (0.1 - rho * (x0 + x1 - c))).abs() < 1e-14);
}

#[test]
fn plain_jacobi_ignores_gamma_and_policy() {
    let p = scalar_pair([1.0, 1.0], [0.0, 0.0], 1.0);
    let u = point([0.3, -0.2], 0.1);
    let a = jacobi_plain_step(
        &p,
        &u,
        &SolverParams::new(2.0, 0.3, ProximalPolicy::standard_uniform(5.0, 2)),
    )
    .unwrap();
    let b = jacobi_proximal_step(&p, &u, &SolverParams::new(2.0, 1.0, ProximalPolicy::None)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dual_decomposition_schedule() {
    let p = scalar_pair([2.0, 4.0], [0.0, 0.0], 1.0);
    let u = point([0.0, 0.0], 1.0);
    let dd = DualDecompositionParams::default();
    let next = dual_decomposition_step(&p, &u, 3, dd).unwrap();
    // x_i = λ/h_i without penalty
    assert!((next.x[0][0] - 0.5).abs() < 1e-15);
    assert!((next.x[1][0] - 0.25).abs() < 1e-15);
    let alpha = 1.0 / 2.0;
    assert!((next.lambda[0] - (1.0 - alpha * (0.75 - 1.0))).abs() < 1e-15);
    assert_eq!(
        DualDecompositionParams {
            alpha0: 2.0,
            schedule: StepSchedule::Constant
        }
        .step_size(10),
        2.0
    );
}

#[test]
fn order_does_not_change_jacobi_step() {
    let p = scalar_pair([2.0, 3.0], [1.0, -1.0], 0.5);
    let params = SolverParams::new(1.0, 1.2, ProximalPolicy::standard_uniform(1.0, 2));
    let u = point([0.3, -0.2], 0.1);
    let a = jacobi_proximal_step_ordered(&p, &u, &params, &[0, 1]).unwrap();
    let b = jacobi_proximal_step_ordered(&p, &u, &params, &[1, 0]).unwrap();
    assert_eq!(a, b);
    assert!(jacobi_proximal_step_ordered(&p, &u, &params, &[0, 0]).is_err());
    assert!(jacobi_proximal_step_ordered(&p, &u, &params, &[0]).is_err());
}

#[test]
fn run_converges_to_kkt_point() {
    // optimum of ½x² + ½y² s.t. x + y = 2 is x = y = 1, λ = 1
    let p = scalar_pair([1.0, 1.0], [0.0, 0.0], 2.0);
    let params = SolverParams::new(1.0, 1.0, ProximalPolicy::standard_uniform(2.0, 2));
    let star = point([1.0, 1.0], 1.0);
    let trace = run(&p, &params, &PrimalDualPoint::zeros(&p), Some(&star), None).unwrap();
    assert_eq!(trace.status, Status::Converged);
    assert!(trace.final_dis().unwrap() <= 1e-10);
    assert_eq!(trace.records[0].k, 0);
    assert_eq!(trace.records.len(), trace.iterations() + 1);
}

#[test]
fn run_reports_divergence() {
    // plain Jacobi on many identical coupled blocks with a large penalty diverges
    let n = 6;
    let blocks = (0..n)
        .map(|_| Block {
            objective: BlockObjective::Quadratic(QuadraticBlock::new(DenseMatrix::diag(&[0.01]), v(&[0.0])).unwrap()),
            a: DenseMatrix::identity(1),
        })
        .collect();
    let p = BlockProblem::new(blocks, v(&[1.0])).unwrap();
    let solver = Solver::new(
        &p,
        Method::JacobiPlain,
        SolverParams::new(10.0, 1.0, ProximalPolicy::None),
    )
    .unwrap();
    let trace = solver.run(&PrimalDualPoint::zeros(&p), None, None).unwrap();
    assert_eq!(trace.status, Status::Diverged);
}

#[test]
fn logistic_blocks_solve_to_tolerance() {
    let blocks = [(1.0, 1.5, 0.5, -1.0), (0.5, -2.0, 3.0, 2.0)]
        .iter()
        .map(|&(a, b, c, d)| Block {
            objective: BlockObjective::LogisticQuad(LogisticQuadBlock::new(a, b, c, d).unwrap()),
            a: DenseMatrix::identity(1),
        })
        .collect();
    let p = BlockProblem::new(blocks, v(&[0.0])).unwrap();
    let params = SolverParams::new(1.0, 1.0, ProximalPolicy::standard_uniform(1.0, 2));
    let u = point([0.2, 0.1], -0.3);
    let next = jacobi_proximal_step(&p, &u, &params).unwrap();
    for i in 0..2 {
        let BlockObjective::LogisticQuad(l) = &p.block(i).objective else {
            unreachable!()
        };
        let other = u.x[1 - i][0];
        let x = next.x[i][0];
        let grad = l.derivative(x) + (x + other) - u.lambda[0] + (x - u.x[i][0]);
        assert!(grad.abs() <= 1e-12, "block {i}: {grad}");
    }
}

#[test]
fn parameter_validation() {
    let p = scalar_pair([1.0, 1.0], [0.0, 0.0], 1.0);
    for params in [
        SolverParams::new(0.0, 1.0, ProximalPolicy::None),
        SolverParams::new(1.0, -1.0, ProximalPolicy::None),
        SolverParams {
            max_iters: 0,
            ..SolverParams::default()
        },
    ] {
        assert!(matches!(
            Solver::new(&p, Method::JacobiProximal, params),
            Err(SolveError::InvalidParams(_))
        ));
    }
    let wrong_len = SolverParams::new(1.0, 1.0, ProximalPolicy::standard_uniform(1.0, 3));
    assert!(Solver::new(&p, Method::JacobiProximal, wrong_len).is_err());
}

#[test]
fn parallel_and_serial_agree() {
    let p = scalar_pair([2.0, 3.0], [1.0, -1.0], 0.5);
    let params = SolverParams::new(1.0, 1.2, ProximalPolicy::standard_uniform(1.0, 2));
    let u = point([0.3, -0.2], 0.1);
    let a = Solver::new(&p, Method::JacobiProximal, params.clone())
        .unwrap()
        .with_parallel(true)
        .step(&u, 0)
        .unwrap();
    let b = Solver::new(&p, Method::JacobiProximal, params)
        .unwrap()
        .with_parallel(false)
        .step(&u, 0)
        .unwrap();
    assert_eq!(a, b);
}
