use super::*;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::{Block, BlockObjective, BlockProblem, LogisticQuadBlock, PrimalDualPoint, QuadraticBlock};
use crate::solvers::ProximalPolicy;

fn quad_problem(hs: &[DenseMatrix], as_: &[DenseMatrix]) -> BlockProblem {
    let blocks = hs
        .iter()
        .zip(as_)
        .map(|(h, a)| Block {
            objective: BlockObjective::Quadratic(QuadraticBlock::new(h.clone(), DenseVector::zeros(h.rows())).unwrap()),
            a: a.clone(),
        })
        .collect();
    BlockProblem::new(blocks, DenseVector::zeros(as_[0].rows())).unwrap()
}

fn worked_single() -> BlockProblem {
    quad_problem(&[DenseMatrix::scaled_identity(3, 2.0)], &[DenseMatrix::identity(3)])
}

#[test]
fn scalar_xi_example() {
    let p = quad_problem(
        &[DenseMatrix::identity(1), DenseMatrix::identity(1)],
        &[DenseMatrix::identity(1), DenseMatrix::identity(1)],
    );
    let p_list = vec![DenseMatrix::diag(&[2.0]); 2];
    let r = check_xi_condition(&p, 1.0, 1.0, 0.001, &p_list).unwrap();
    assert!(r.passed);
    // 1 + 2 − 8·0.001·9 − 2/(1 − 1e-6)
    let expected = 3.0 - 0.072 - 2.0 / (1.0 - 1e-6);
    assert!((r.min_eigs[0] - expected).abs() < 1e-12);
}

#[test]
fn gamma_range() {
    let p = worked_single();
    for g in [0.0, 2.0, 2.5, -1.0] {
        assert!(matches!(
            certify(&p, 1.0, g, &ProximalPolicy::None, &CertifyOptions::default()),
            Err(CertError::GammaOutOfRange { .. })
        ));
    }
}

#[test]
fn mu_s_example() {
    let p = quad_problem(&[DenseMatrix::identity(2)], &[DenseMatrix::identity(2)]);
    let consts = ProblemConstants {
        alpha: 1.0,
        moduli: vec![1.0],
        l_list: vec![1.0],
        l: 1.0,
        d: 1.0,
        c_a: 1.0,
        a_norms: vec![1.0],
    };
    let mu = compute_mu_s(&p, &consts, 1.0, 0.1, &[DenseMatrix::zeros(2, 2)]).unwrap();
    assert!((mu - 1.4 / 2.6).abs() < 1e-14);
}

#[test]
fn worked_pipeline() {
    let cert = certify(
        &worked_single(),
        1.0,
        1.0,
        &ProximalPolicy::None,
        &CertifyOptions::default(),
    )
    .unwrap();
    // s̄ = (1/2)/(1 + 4), s = s̄/2
    assert!((cert.s_bar - 0.1).abs() < 1e-15);
    assert!((cert.s - 0.05).abs() < 1e-15);
    assert!((cert.margins.alpha_2ls - 0.6).abs() < 1e-14);
    let mu = 1.2 / 2.2;
    assert!((cert.mu_s.unwrap() - mu).abs() < 1e-12);
    assert!((cert.sigma.unwrap() - 0.9).abs() < 1e-12);
    // P = 0 with N = 1, γ = 1 violates the ξ condition: 1 − 0.4 − 1/(1−1e-6) < 0
    assert!(!cert.passed);
    assert!(matches!(cert.failures[0], Failure::XiCondition { block: 0, .. }));
}

#[test]
fn sigma_clamps_large_c_a() {
    let v = compute_sigma(1.0, 1.0, 0.5, 10.0, 0.3);
    assert!(v.clamped);
    assert!((v.sigma - 0.3).abs() < 1e-15);
    assert!(v.contractive);
    let w = compute_sigma(1.0, 1.0, 0.1, 1.0, 0.9);
    assert_eq!(w.sigma, 0.9);
}

#[test]
fn auto_tau_certifies() {
    let p = quad_problem(
        &[DenseMatrix::diag(&[1.0, 3.0]), DenseMatrix::diag(&[2.0])],
        &[
            DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap(),
            DenseMatrix::from_rows(&[vec![0.3], vec![1.0]]).unwrap(),
        ],
    );
    for kind in [TauKind::Standard, TauKind::ProxLinear] {
        for gamma in [0.1, 1.0, 1.9] {
            let policy = match auto_tau_policy(&p, 1.0, gamma, kind) {
                Ok(policy) => policy,
                // near γ = 2 the (ρ/ξ)A_iᵀA_i term outgrows the 8sK² window
                Err(CertError::NoAdmissibleTau { .. }) if gamma > 1.5 => continue,
                Err(e) => panic!("{e}"),
            };
            let cert = certify(&p, 1.0, gamma, &policy, &CertifyOptions::default()).unwrap();
            assert!(cert.passed, "{kind:?} gamma {gamma}: {:?}", cert.failures);
            let s = cert.sigma.unwrap();
            assert!(s > 0.0 && s < 1.0);
        }
    }
}

#[test]
fn refined_xi_never_does_worse() {
    let p = quad_problem(
        &[DenseMatrix::identity(1), DenseMatrix::identity(1)],
        &[DenseMatrix::identity(1), DenseMatrix::diag(&[0.1])],
    );
    let p_list = vec![DenseMatrix::diag(&[0.9]), DenseMatrix::diag(&[0.05])];
    let uniform = check_xi_condition_with(&p, 1.0, 1.0, 0.001, &p_list, XiMode::Uniform).unwrap();
    let refined = check_xi_condition_with(&p, 1.0, 1.0, 0.001, &p_list, XiMode::Refined).unwrap();
    assert!(!uniform.passed);
    assert!(refined.passed);
    assert!(refined.xi.iter().sum::<f64>() < 1.0);
}

#[test]
fn tiny_modulus_fails_certification() {
    let blocks = [1e-4, 1.0]
        .iter()
        .map(|&a| Block {
            objective: BlockObjective::LogisticQuad(LogisticQuadBlock::new(a, 1.0, 0.0, 0.0).unwrap()),
            a: DenseMatrix::identity(1),
        })
        .collect();
    let p = BlockProblem::new(blocks, DenseVector::zeros(1)).unwrap();
    let cert = certify(
        &p,
        1.0,
        1.0,
        &ProximalPolicy::standard_uniform(1.0, 2),
        &CertifyOptions::default(),
    )
    .unwrap();
    assert!(!cert.passed);
    assert!(matches!(cert.failures[0], Failure::NotStronglyConvex { .. }));
    assert!(cert.sigma.is_none());
}

#[test]
fn phi_single_terms() {
    let p = worked_single();
    let consts = estimate_constants(&p).unwrap();
    let reference = PrimalDualPoint::zeros(&p);
    let p_list = vec![DenseMatrix::zeros(3, 3)];
    assert_eq!(
        lyapunov_phi(&p, &reference, &reference, 1.0, 1.0, 0.05, &p_list, &consts).unwrap(),
        0.0
    );
    let mut u = reference.clone();
    u.lambda = DenseVector::from_vec(vec![1.0, 2.0, 2.0]);
    let phi = lyapunov_phi(&p, &u, &reference, 0.5, 2.0, 0.05, &p_list, &consts).unwrap();
    assert!((phi - 9.0 / 2.0).abs() < 1e-14);
    assert!(matches!(
        lyapunov_phi(&p, &u, &reference, 1.0, 1.0, 1.0, &p_list, &consts),
        Err(CertError::NonPositiveWeight { .. })
    ));
}
