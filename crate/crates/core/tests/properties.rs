use std::sync::Arc;

use fracvi::obstacle::{
    check_equivalent_conditions, compare_solutions, solve_vi_active_set, solve_vi_psor,
    solve_vi_psor_from, verify_lewy_stampacchia,
};
use fracvi::random::{random_obstacle_problem, smooth_field, white_noise};
use fracvi::{DomainSpec, EigenBasis, FracOperator, GridFunction, ObstacleProblem, SolverConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn basis_1d(n: usize) -> Arc<EigenBasis> {
    Arc::new(EigenBasis::build(DomainSpec::interval(1.0, n).unwrap()).unwrap())
}

fn basis_2d(nx: usize, ny: usize) -> Arc<EigenBasis> {
    Arc::new(EigenBasis::build(DomainSpec::rectangle(1.0, 1.5, nx, ny).unwrap()).unwrap())
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_round_trip(v in vec_strategy(8)) {
        let b = basis_1d(8);
        let g = GridFunction::new(*b.domain(), v).unwrap();
        let back = b.from_spectral(&b.to_spectral(&g).unwrap()).unwrap();
        prop_assert!((&back - &g).max_abs() < 1e-10 * (1.0 + g.max_abs()));
    }

    #[test]
    fn parseval(v in vec_strategy(12)) {
        let b = basis_2d(4, 3);
        let g = GridFunction::new(*b.domain(), v).unwrap();
        let c = b.to_spectral(&g).unwrap();
        let sum: f64 = c.iter().map(|x| x * x).sum();
        let l2 = b.l2_inner(&g, &g).unwrap();
        prop_assert!((sum - l2).abs() < 1e-10 * (1.0 + l2));
    }

    #[test]
    fn duality_pairing(v in vec_strategy(8), s in 0.05f64..0.95) {
        let b = basis_1d(8);
        let g = GridFunction::new(*b.domain(), v).unwrap();
        let op = FracOperator::power(b.clone(), s).unwrap();
        let pairing = op.apply(&g).unwrap().l2_dot(&g).unwrap();
        let hs = b.hs_norm_sq(s, &g).unwrap();
        prop_assert!((pairing - hs).abs() < 1e-10 * (1.0 + hs));
        prop_assert!((b.hs_norm(s, &g).unwrap().powi(2) - hs).abs() < 1e-10 * (1.0 + hs));
    }

    #[test]
    fn semigroup(v in vec_strategy(8), s1 in 0.05f64..0.45, s2 in 0.05f64..0.45) {
        let b = basis_1d(8);
        let g = GridFunction::new(*b.domain(), v).unwrap();
        let a1 = FracOperator::power(b.clone(), s1).unwrap();
        let a2 = FracOperator::power(b.clone(), s2).unwrap();
        let a12 = FracOperator::power(b, s1 + s2).unwrap();
        let lhs = a1.apply(&a2.apply(&g).unwrap()).unwrap();
        let rhs = a12.apply(&g).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() < 1e-10 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn positive_definite(v in vec_strategy(12), s in 0.05f64..0.95, shift in 0.0f64..2.0) {
        let b = basis_2d(4, 3);
        let g = GridFunction::new(*b.domain(), v).unwrap();
        prop_assume!(g.l2_norm() > 1e-6);
        let op = FracOperator::new(b, s, shift).unwrap();
        let rq = op.energy(&g).unwrap() / g.l2_dot(&g).unwrap();
        prop_assert!(rq >= op.min_eigenvalue() - 1e-8);
    }

    #[test]
    fn solve_round_trip(v in vec_strategy(8), s in 0.05f64..0.95) {
        let b = basis_1d(8);
        let f = GridFunction::new(*b.domain(), v).unwrap();
        let op = FracOperator::new(b, s, 0.5).unwrap();
        let u = op.solve(&f).unwrap();
        prop_assert!((&op.apply(&u).unwrap() - &f).max_abs() < 1e-10 * (1.0 + f.max_abs()));
    }

    #[test]
    fn monotone_inverse(v in prop::collection::vec(0.0f64..10.0, 16), s in 0.05f64..0.95) {
        let b = basis_1d(16);
        let f = GridFunction::new(*b.domain(), v).unwrap();
        let u = FracOperator::power(b, s).unwrap().solve(&f).unwrap();
        prop_assert!(u.min_value() >= -1e-10);
    }

    #[test]
    fn dense_matches_apply(v in vec_strategy(8)) {
        let b = basis_1d(8);
        let g = GridFunction::new(*b.domain(), v).unwrap();
        let op = FracOperator::new(b, 0.6, 0.3).unwrap();
        let a = op.assemble_dense().unwrap();
        let dense = &a * nalgebra::DVector::from_column_slice(g.values());
        let spec = op.apply(&g).unwrap();
        for (x, y) in dense.iter().zip(spec.values()) {
            prop_assert!((x - y).abs() < 1e-10 * (1.0 + spec.max_abs()));
        }
    }
}

#[test]
fn first_eigenvalue_against_dense_eigensolver() {
    let b = basis_1d(3);
    let want = 32.0 * (1.0 - 2f64.sqrt() / 2.0);
    assert!((b.eigenvalues()[0] - want).abs() < 1e-12);
    let h2 = 0.0625;
    let t = nalgebra::DMatrix::from_fn(3, 3, |i, j| match i.abs_diff(j) {
        0 => 2.0 / h2,
        1 => -1.0 / h2,
        _ => 0.0,
    });
    let mut ev: Vec<f64> = t.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    for (a, e) in b.eigenvalues().iter().zip(&ev) {
        assert!((a - e).abs() < 1e-10 * e);
    }
}

#[test]
fn hs_norm_matches_direct_sum() {
    let b = basis_1d(8);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = white_noise(*b.domain(), 1.0, &mut rng);
    let c = b.to_spectral(&v).unwrap();
    let direct: f64 = c.iter().zip(b.eigenvalues()).map(|(ck, l)| l.powf(0.3) * ck * ck).sum();
    assert!((b.hs_norm_sq(0.3, &v).unwrap() - direct).abs() < 1e-12 * direct);
}

#[test]
fn hs_norm_increases_with_order_on_high_modes() {
    let b = basis_1d(16);
    let mut c = vec![0.0; 16];
    c[3] = 0.6;
    c[7] = 0.8;
    let v = b.from_spectral(&c).unwrap();
    let mut last = 0.0;
    for s in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let n = b.hs_norm(s, &v).unwrap();
        assert!(n > last);
        last = n;
    }
}

#[test]
fn gagliardo_is_comparable_to_spectral_norm() {
    let b = basis_1d(16);
    let s = 0.4;
    let phi = b.mode(0);
    let base = b.gagliardo_seminorm(s, &phi).unwrap() / b.hs_norm_sq(s, &phi).unwrap();
    assert!(base > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let v = &phi + &white_noise(*b.domain(), 0.01, &mut rng);
        let r = b.gagliardo_seminorm(s, &v).unwrap() / b.hs_norm_sq(s, &v).unwrap();
        assert!((r / base - 1.0).abs() < 0.1, "ratio {r} vs {base}");
    }
}

#[test]
fn lions_magenes_penalizes_boundary_mass() {
    let b = basis_1d(3);
    let ones = GridFunction::constant(*b.domain(), 1.0);
    assert!((b.lions_magenes_functional(&ones).unwrap() - 2.5).abs() < 1e-12);

    let b = basis_1d(16);
    let phi = b.mode(0);
    let mut spike = vec![0.0; 16];
    spike[0] = 1.0;
    let spike = GridFunction::new(*b.domain(), spike).unwrap();
    let per_mass = |v: &GridFunction| b.lions_magenes_functional(v).unwrap() / v.l2_dot(v).unwrap();
    assert!(per_mass(&spike) > per_mass(&phi));
}

#[test]
fn dense_power_near_one_is_the_stencil() {
    let b = basis_1d(3);
    let op = FracOperator::new(b, 0.9999, 0.5).unwrap();
    let a = op.assemble_dense().unwrap();
    let h2 = 0.0625;
    for i in 0..3usize {
        for j in 0..3 {
            let want = match i.abs_diff(j) {
                0 => 2.0 / h2 + 0.5,
                1 => -1.0 / h2,
                _ => 0.0,
            };
            assert!((a[(i, j)] - want).abs() <= 1e-2 * (2.0 / h2));
        }
    }
    let raw = op.assemble_power_unsymmetrized().unwrap();
    assert!((&raw - raw.transpose()).amax() < 1e-10);
}

#[test]
fn psor_is_independent_of_the_start() {
    let b = basis_1d(32);
    let op = FracOperator::new(b, 0.5, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SolverConfig::default();
    for _ in 0..5 {
        let prob = random_obstacle_problem(&op, &mut rng).unwrap();
        let from_psi = solve_vi_psor(&prob, &cfg).unwrap();
        let free = op.solve(prob.force()).unwrap();
        let start = free.zip_map(prob.obstacle(), f64::max).unwrap();
        let from_free = solve_vi_psor_from(&prob, &cfg, &start).unwrap();
        assert!((&from_psi.u - &from_free.u).max_abs() < 1e-7);
    }
}

#[test]
fn solution_is_below_every_feasible_supersolution() {
    let b = basis_1d(24);
    let op = FracOperator::new(b.clone(), 0.6, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let prob = random_obstacle_problem(&op, &mut rng).unwrap();
        let u = solve_vi_active_set(&prob, &SolverConfig::default()).unwrap().u;
        let noise = white_noise(*b.domain(), 1.0, &mut rng).map(f64::abs);
        let target = &prob.ls_upper_bound() + &noise;
        // A⁻¹ of something ≥ Aψ lies above ψ, so w ∈ K₀ ∩ K₁.
        let w = op.solve(&target).unwrap();
        assert!(prob.obstacle().le_within(&w, 1e-10).unwrap());
        assert!(u.le_within(&w, 1e-8).unwrap());
    }
}

#[test]
fn random_ls_and_conditions_on_small_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in [0.25, 0.5, 0.75] {
        let op = FracOperator::new(basis_1d(20), s, 0.0).unwrap();
        for _ in 0..5 {
            let prob = random_obstacle_problem(&op, &mut rng).unwrap();
            let sol = solve_vi_active_set(&prob, &SolverConfig::default()).unwrap();
            assert!(verify_lewy_stampacchia(&sol, &prob, 1e-7).unwrap().holds());
            let rep = check_equivalent_conditions(&sol, &prob, 32, &mut rng).unwrap();
            assert!(rep.worst() >= -1e-7, "{rep:?}");
        }
    }
}

#[test]
fn comparison_rejects_unordered_obstacles() {
    let b = basis_1d(8);
    let op = FracOperator::power(b.clone(), 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = smooth_field(&b, 1.0, 1.0, &mut rng);
    let psi = smooth_field(&b, 1.0, 1.0, &mut rng);
    let p1 = ObstacleProblem::new(op.clone(), f.clone(), psi.map(|v| v + 1.0)).unwrap();
    let p2 = ObstacleProblem::new(op, f, psi).unwrap();
    assert!(compare_solutions(&p1, &p2, &SolverConfig::default(), 1e-8).is_err());
}
