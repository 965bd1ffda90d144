use jprox::certification::TauKind;
use jprox::experiments::{
    dis_metric, generate_lcqp, generate_resource_alloc, run_sweep, write_trace_csv, PolicyChoice, SweepConfig,
    SweepInstance, STACK_RANK_TOL,
};
use jprox::linalg::{smallest_singular_value_stacked, DenseVector};
use jprox::problem::{kkt_residual, PrimalDualPoint};
use proptest::prelude::*;

fn csv_without_elapsed(trace: &jprox::solvers::Trace) -> String {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, trace).unwrap();
    String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_lcqp_meets_its_invariants(n_blocks in 1usize..5, n in 1usize..6, extra in 0usize..4, seed in 0u64..1000) {
        let m = (n_blocks * n).saturating_sub(extra).max(1);
        let inst = generate_lcqp(n_blocks, m, n, seed).unwrap();
        prop_assert!(kkt_residual(&inst.problem, &inst.optimum()).unwrap() <= 1e-9);
        let c_a = smallest_singular_value_stacked(&inst.problem.constraint_matrices()).unwrap();
        prop_assert!(c_a > STACK_RANK_TOL);
        prop_assert_eq!(inst.problem.block_dims(), vec![n; n_blocks]);
        prop_assert_eq!(inst.problem.m(), m);
    }

    #[test]
    fn dis_is_zero_only_at_the_reference(vals in prop::collection::vec(-5.0..5.0f64, 6), idx in 0usize..6, bump in 1e-10..1.0f64) {
        let u = PrimalDualPoint::new(
            vec![DenseVector::from_vec(vals[..2].to_vec()), DenseVector::from_vec(vals[2..4].to_vec())],
            DenseVector::from_vec(vals[4..].to_vec()),
        );
        prop_assert_eq!(dis_metric(&u, &u).unwrap(), 0.0);
        let mut flat = vals.clone();
        flat[idx] += bump;
        let w = PrimalDualPoint::new(
            vec![DenseVector::from_vec(flat[..2].to_vec()), DenseVector::from_vec(flat[2..4].to_vec())],
            DenseVector::from_vec(flat[4..].to_vec()),
        );
        prop_assert!(dis_metric(&w, &u).unwrap() > 1e-14);
    }
}

#[test]
fn generation_is_deterministic() {
    let a = generate_lcqp(3, 10, 5, 42).unwrap();
    let b = generate_lcqp(3, 10, 5, 42).unwrap();
    assert_eq!(a.xstar, b.xstar);
    assert_eq!(a.lambdastar, b.lambdastar);
    assert_eq!(a.proximal, b.proximal);
    for (x, y) in a.problem.blocks().iter().zip(b.problem.blocks()) {
        assert_eq!(x.a, y.a);
    }
    assert_ne!(generate_lcqp(3, 10, 5, 43).unwrap().xstar, a.xstar);
    let r1 = generate_resource_alloc(6, 9).unwrap();
    let r2 = generate_resource_alloc(6, 9).unwrap();
    assert_eq!(r1.coefficients, r2.coefficients);
}

#[test]
fn sweeps_are_deterministic() {
    let run = || {
        let inst = generate_lcqp(3, 10, 5, 1).unwrap();
        let instances = [SweepInstance {
            reference: inst.optimum(),
            problem: inst.problem,
            seed: 1,
        }];
        let config = SweepConfig {
            rho_grid: vec![1.0, 5.0],
            gamma_grid: vec![0.5, 1.9],
            max_iters: 300,
            seeds: vec![1],
        };
        run_sweep(&instances, &config, &PolicyChoice::AutoTau(TauKind::Standard), None).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.cells.len(), 4);
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!((x.rho, x.gamma), (y.rho, y.gamma));
        assert_eq!(x.certificate, y.certificate);
        assert_eq!(
            csv_without_elapsed(x.trace.as_ref().unwrap()),
            csv_without_elapsed(y.trace.as_ref().unwrap())
        );
    }
}

#[test]
fn resource_allocation_draws_stay_in_range() {
    for seed in 0..20 {
        let inst = generate_resource_alloc(8, seed).unwrap();
        assert_eq!(inst.problem.m(), 1);
        for c in &inst.coefficients {
            assert!((0.0..=2.0).contains(&c.a));
            assert!((-2.0..=2.0).contains(&c.b));
            assert!((-10.0..=10.0).contains(&c.cshift));
            assert!((-10.0..=10.0).contains(&c.dshift));
        }
    }
}
