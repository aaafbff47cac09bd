use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxid::svm::{
    decompose_train, smo_train, train, Decomposition, KernelSpec, Solver, SolverKind, SvmError, SvmModel,
    TrainingProblem,
};
use voxid_oracles::{brute_force_dual, dual_objective, gram, kkt_violation, Kernel};

fn oracle_kernel(k: KernelSpec) -> Kernel {
    match k {
        KernelSpec::Linear => Kernel::Linear,
        KernelSpec::Rbf { gamma } => Kernel::Rbf(gamma),
        KernelSpec::Polynomial { degree, coef0 } => Kernel::Poly(degree, coef0),
    }
}

/// Recovers each training point's multiplier from the model's support vectors.
fn alphas_of(model: &SvmModel, points: &[Vec<f64>], labels: &[f64]) -> Vec<f64> {
    points
        .iter()
        .zip(labels)
        .map(|(p, y)| {
            model
                .support_vectors()
                .iter()
                .position(|sv| sv == p)
                .map_or(0.0, |i| model.coeffs()[i] * y)
        })
        .collect()
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    loop {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let ys: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        if ys.iter().any(|&y| y > 0.0) && ys.iter().any(|&y| y < 0.0) {
            return (pts, ys);
        }
    }
}

fn kernels(dim: usize) -> [KernelSpec; 3] {
    [
        KernelSpec::Linear,
        KernelSpec::Rbf { gamma: 1.0 / dim as f64 },
        KernelSpec::Polynomial { degree: 2, coef0: 1.0 },
    ]
}

#[test]
fn smo_reaches_the_enumerated_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..60 {
        let n = rng.random_range(2..=7);
        let (pts, ys) = random_problem(&mut rng, n, 2);
        let kernel = kernels(2)[trial % 3];
        let c = [0.1, 1.0, 10.0][trial / 3 % 3];
        let p = TrainingProblem::new(&pts, &ys, c, kernel).unwrap();
        let m = smo_train(&p).unwrap();
        let k = gram(&pts, oracle_kernel(kernel));
        let (best, _) = brute_force_dual(&ys, &k, c);
        let alpha = alphas_of(&m, &pts, &ys);
        let got = dual_objective(&alpha, &ys, &k);
        assert!((got - best).abs() < 1e-3, "trial {trial}: {got} vs {best}");
        assert!((m.meta.dual_objective - got).abs() < 1e-9);
        let u: Vec<f64> = pts.iter().map(|x| m.decision_value(x).unwrap()).collect();
        let v = kkt_violation(&alpha, &ys, &u, c);
        assert!(v <= 10.0 * p.tol, "trial {trial}: violation {v}");
    }
}

#[test]
fn xor_is_separable_with_rbf() {
    let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let ys = vec![-1.0, -1.0, 1.0, 1.0];
    let p = TrainingProblem::new(&pts, &ys, 100.0, KernelSpec::Rbf { gamma: 2.0 }).unwrap();
    for solver in [
        SolverKind::Smo,
        SolverKind::Chunking { chunk: 2 },
        SolverKind::FixedSize { size: 2, swap: 1 },
    ] {
        let m = train(&p, solver).unwrap();
        for (x, y) in pts.iter().zip(&ys) {
            assert_eq!(f64::from(m.classify(x).unwrap()), *y, "{solver}");
        }
        assert_eq!(m.support_vector_count(), 4, "{solver}");
    }
    let lin = smo_train(&TrainingProblem::new(&pts, &ys, 100.0, KernelSpec::Linear).unwrap()).unwrap();
    let wrong = pts
        .iter()
        .zip(&ys)
        .filter(|(x, y)| f64::from(lin.classify(x).unwrap()) != **y)
        .count();
    assert!(wrong > 0, "a line cannot split XOR");
}

#[test]
fn single_class_is_rejected() {
    let r = TrainingProblem::new(&[vec![0.0], vec![1.0]], &[1.0, 1.0], 1.0, KernelSpec::Linear);
    assert!(matches!(r, Err(SvmError::SingleClassData)));
}

#[test]
fn iteration_cap_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (pts, ys) = random_problem(&mut rng, 60, 3);
    let p = TrainingProblem::new(&pts, &ys, 10.0, KernelSpec::Rbf { gamma: 0.3 })
        .unwrap()
        .with_max_iter(3);
    match smo_train(&p) {
        Err(SvmError::IterationLimitExceeded(m)) => {
            assert!(m.meta.truncated);
            assert_eq!(m.meta.iterations, 3);
        }
        other => panic!("expected truncation, got {other:?}"),
    }
}

#[test]
fn solvers_agree_on_a_noisy_problem() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (pts, ys) = random_problem(&mut rng, 120, 3);
    for kernel in kernels(3) {
        let p = TrainingProblem::new(&pts, &ys, 1.0, kernel).unwrap().with_tol(1e-4);
        let smo = smo_train(&p).unwrap();
        let chunk = decompose_train(&p, Decomposition::Chunking { chunk: 10 }).unwrap();
        let fixed = decompose_train(&p, Decomposition::FixedSize { size: 10, swap: 2 }).unwrap();
        let w = smo.meta.dual_objective;
        for other in [&chunk, &fixed] {
            assert!(
                (other.meta.dual_objective - w).abs() <= 1e-3 * w.abs().max(1.0),
                "{kernel}: {} vs {w}",
                other.meta.dual_objective
            );
        }
        assert!(fixed.meta.outer_iterations > 1);
    }
}

#[test]
fn kernel_cache_does_not_change_the_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (pts, ys) = random_problem(&mut rng, 80, 2);
    let base = TrainingProblem::new(&pts, &ys, 1.0, KernelSpec::Rbf { gamma: 0.5 }).unwrap();
    let a = smo_train(&base).unwrap();
    let b = smo_train(&base.clone().with_kernel_cache(16)).unwrap();
    assert_eq!(a.meta.iterations, b.meta.iterations);
    for x in &pts {
        assert!((a.decision_value(x).unwrap() - b.decision_value(x).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn rbf_solution_invariant_under_joint_rescaling() {
    // K(sx, sz; gamma / s^2) = K(x, z; gamma), so the dual is unchanged.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (pts, ys) = random_problem(&mut rng, 40, 2);
    let s = 3.0;
    let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * s).collect()).collect();
    let a = smo_train(&TrainingProblem::new(&pts, &ys, 1.0, KernelSpec::Rbf { gamma: 0.5 }).unwrap()).unwrap();
    let b = smo_train(
        &TrainingProblem::new(&scaled, &ys, 1.0, KernelSpec::Rbf { gamma: 0.5 / (s * s) }).unwrap(),
    )
    .unwrap();
    assert!((a.meta.dual_objective - b.meta.dual_objective).abs() < 1e-3);
    for (x, xs) in pts.iter().zip(&scaled) {
        let (fa, fb) = (a.decision_value(x).unwrap(), b.decision_value(xs).unwrap());
        assert!((fa - fb).abs() < 1e-2, "{fa} vs {fb}");
    }
}

#[test]
fn training_order_does_not_change_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (pts, ys) = random_problem(&mut rng, 50, 2);
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.reverse();
    let pts2: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
    let ys2: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
    let kernel = KernelSpec::Polynomial { degree: 2, coef0: 1.0 };
    let a = smo_train(&TrainingProblem::new(&pts, &ys, 1.0, kernel).unwrap()).unwrap();
    let b = smo_train(&TrainingProblem::new(&pts2, &ys2, 1.0, kernel).unwrap()).unwrap();
    let w = a.meta.dual_objective;
    assert!((w - b.meta.dual_objective).abs() <= 1e-3 * w.abs().max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn multipliers_stay_feasible(seed in any::<u64>(), n in 2usize..30, c in prop::sample::select(vec![0.1, 1.0, 10.0]), which in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pts, ys) = random_problem(&mut rng, n, 2);
        let kernel = kernels(2)[which];
        let p = TrainingProblem::new(&pts, &ys, c, kernel).unwrap();
        let m = smo_train(&p).unwrap();
        let alpha = alphas_of(&m, &pts, &ys);
        prop_assert!(alpha.iter().all(|a| (0.0..=c).contains(a)));
        let resid: f64 = alpha.iter().zip(&ys).map(|(a, y)| a * y).sum();
        prop_assert!(resid.abs() < 1e-9 * c.max(1.0) * n as f64);
        prop_assert!(m.coeffs().iter().all(|a| a.abs() > 0.0 && a.abs() <= c));
    }

    #[test]
    fn every_pair_step_ascends(seed in any::<u64>(), n in 2usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pts, ys) = random_problem(&mut rng, n, 2);
        let p = TrainingProblem::new(&pts, &ys, 1.0, KernelSpec::Rbf { gamma: 0.5 }).unwrap();
        let k = gram(&pts, Kernel::Rbf(0.5));
        let mut s = Solver::new(&p);
        let mut last = dual_objective(s.alphas(), &ys, &k);
        for _ in 0..200 {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            s.solve_two_multipliers(i, j).unwrap();
            let w = dual_objective(s.alphas(), &ys, &k);
            prop_assert!(w >= last - 1e-12, "{w} < {last}");
            prop_assert!(s.equality_residual().abs() < 1e-9);
            last = w;
        }
    }

    #[test]
    fn linear_weights_match_kernel_sum(seed in any::<u64>(), n in 2usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pts, ys) = random_problem(&mut rng, n, 3);
        let m = smo_train(&TrainingProblem::new(&pts, &ys, 1.0, KernelSpec::Linear).unwrap()).unwrap();
        for x in &pts {
            let a = m.decision_value(x).unwrap();
            let b = m.linear_decision_value(x).unwrap().unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
