use std::f64::consts::PI;

use hcurve::oracle::{oscillatory_quadrature, shoot};
use hcurve::problems::{catalog, cubic, Nonlinearity};
use hcurve::solver::{jacobian_check, residual, solve_at_signature, FailureKind};
use hcurve::{ProblemSpec, SineSeries, Solver, SolverSettings};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn linear(e: SineSeries) -> ProblemSpec {
    ProblemSpec::new(1.0, 1, e, Nonlinearity::zero()).unwrap()
}

#[test]
fn pure_harmonic_residual() {
    let p = linear(SineSeries::zeros(1.0, 4));
    let (r, mu) = residual(&p, 1.0, &SineSeries::zeros(1.0, 16)).unwrap();
    assert!((mu + PI * PI).abs() < 1e-12);
    assert!(r.is_zero() || r.l2_norm() < 1e-14);
}

#[test]
fn exact_remainder_has_zero_residual() {
    let p = linear(SineSeries::from_modes(1.0, 2, &[(2, 1.0)]).unwrap());
    let u = SineSeries::from_modes(1.0, 16, &[(2, -1.0 / (4.0 * PI * PI))]).unwrap();
    let (r, mu) = residual(&p, 0.0, &u).unwrap();
    assert!(mu.abs() < 1e-14);
    assert!(r.l2_norm() < 1e-14);
}

#[test]
fn projection_matches_adaptive_quadrature() {
    let p = catalog("oscillatory-p512").unwrap();
    let (r, mu) = residual(&p, 2.0, &SineSeries::zeros(1.0, 64)).unwrap();
    let nl = p.nonlinearity();
    let f = |x: f64| nl.g(2.0 * (PI * x).sin()) * (PI * x).sin();
    let integral = oscillatory_quadrature(&f, &|_| 0.0, 0.0, (0.0, 1.0))
        .unwrap()
        .re;
    let expected = -2.0 * PI * PI + 2.0 * integral;
    assert!((mu - expected).abs() < 1e-10, "{mu} vs {expected}");
    assert!(r.l2_norm() > 1e-3);
    assert_eq!(r.coeff(1), 0.0);
}

#[test]
fn linear_problem_converges_in_one_step() {
    let e = SineSeries::from_modes(1.0, 6, &[(2, 0.7), (3, -1.1), (6, 0.25)]).unwrap();
    let p = linear(e.clone());
    for xi in [-5.0, 0.0, 0.3, 8.0] {
        let pt = solve_at_signature(
            &p,
            xi,
            &SineSeries::zeros(1.0, 32),
            &SolverSettings::default().with_modes(32),
        )
        .unwrap();
        assert!(pt.converged);
        assert!(pt.newton_iters <= 1);
        assert!((pt.mu + PI * PI * xi).abs() < 1e-10);
        for j in 2..=6 {
            let exact = -e.coeff(j) / (j * j) as f64 / (PI * PI);
            assert!((pt.remainder.coeff(j) - exact).abs() < 1e-13);
        }
    }
}

#[test]
fn cubic_at_zero_matches_shooting() {
    let p = cubic(PI * PI / 2.0, None).unwrap();
    let pt = solve_at_signature(
        &p,
        0.0,
        &SineSeries::zeros(1.0, 64),
        &SolverSettings::default(),
    )
    .unwrap();
    assert!(pt.converged);
    let u = pt.solution(p.k());
    let shot = shoot(&p, 0.0).unwrap();
    assert!(shot.converged);
    let sup = shot
        .grid
        .iter()
        .zip(&shot.grid_solution)
        .map(|(&x, &v)| (u.eval(x) - v).abs())
        .fold(0.0, f64::max);
    assert!(sup < 1e-6, "sup error {sup}");
    assert!((pt.mu - shot.mu).abs() < 1e-6);
}

#[test]
fn jacobian_matches_finite_differences() {
    let lin = linear(SineSeries::from_modes(1.0, 3, &[(3, 1.0)]).unwrap());
    assert!(jacobian_check(&lin, 2.0, &SineSeries::zeros(1.0, 24)).unwrap() < 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c: Vec<f64> = (1..=24)
        .map(|j| {
            if j == 1 {
                0.0
            } else {
                rng.gen_range(-0.5..0.5) / j as f64
            }
        })
        .collect();
    let u = SineSeries::new(1.0, c).unwrap();
    let cub = cubic(1.0, None).unwrap();
    assert!(jacobian_check(&cub, 1.0, &u).unwrap() < 1e-5);

    let k7 = catalog("resonance-k7").unwrap();
    assert!(jacobian_check(&k7, 10.0, &SineSeries::zeros(1.0, 64)).unwrap() < 1e-5);
}

#[test]
fn resonant_linearization_is_reported_singular() {
    // g' = lambda_2 makes the second mode's row vanish, and e_2 != 0 leaves
    // no solution, so Newton has to factor J.
    let e = SineSeries::from_modes(1.0, 2, &[(2, 0.5)]).unwrap();
    let p = ProblemSpec::new(1.0, 1, e, Nonlinearity::linear(4.0 * PI * PI)).unwrap();
    let pt = solve_at_signature(
        &p,
        1.0,
        &SineSeries::zeros(1.0, 16),
        &SolverSettings::default().with_modes(16),
    )
    .unwrap();
    assert!(!pt.converged);
    assert!(
        matches!(pt.failure, Some(FailureKind::SingularJacobian { .. })),
        "{:?}",
        pt.failure
    );
}

#[test]
fn k7_solution_is_unique_from_random_starts() {
    let p = catalog("resonance-k7").unwrap();
    let solver = Solver::new(&p, SolverSettings::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut first: Option<SineSeries> = None;
    for _ in 0..10 {
        let mut c: Vec<f64> = (1..=64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        c[6] = 0.0;
        let u0 = SineSeries::new(1.0, c).unwrap();
        let u0 = &u0 * (rng.gen_range(0.0..5.0) / u0.l2_norm());
        let pt = solver.solve(15.0, &u0).unwrap();
        assert!(pt.converged);
        match &first {
            None => first = Some(pt.remainder),
            Some(f) => {
                let sup = (0..=200)
                    .map(|i| i as f64 / 200.0)
                    .map(|x| (f.eval(x) - pt.remainder.eval(x)).abs())
                    .fold(0.0, f64::max);
                assert!(sup < 1e-8, "{sup}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn converged_points_verify(xi in -30.0f64..30.0, which in 0usize..3) {
        let name = ["amann-hess-type", "resonant-bounded", "oscillatory-p512"][which];
        let p = catalog(name).unwrap();
        let settings = SolverSettings::default();
        let solver = Solver::new(&p, settings).unwrap();
        let pt = solver.solve(xi, &SineSeries::zeros(1.0, 64)).unwrap();
        prop_assert!(pt.converged);
        prop_assert_eq!(pt.remainder.coeff(p.k()), 0.0);
        prop_assert!(pt.residual_norm < settings.newton_tol);
        let again = solver.residual_norm(xi, &pt.remainder).unwrap();
        prop_assert!(again < settings.newton_tol);
        let (_, mu) = solver.residual(xi, &pt.remainder).unwrap();
        prop_assert_eq!(mu, pt.mu);
    }
}
