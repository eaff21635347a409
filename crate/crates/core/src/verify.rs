//! Self-check suites behind `hcurve verify`.
//!
//! Each check yields one [`Check`]; [`format_table`] prints them as
//! tab-separated `STATUS SUITE CHECK DETAIL` rows.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::{envelope, stationary_phase, AsymptoticCurve, Phase};
use crate::continuation::{count_solutions, follow_curve};
use crate::error::{Error, Result};
use crate::oracle::{integrate, oscillatory_quadrature, shoot};
use crate::problems::{catalog, Nonlinearity, ProblemSpec, CATALOG};
use crate::solver::{Solver, SolverSettings};
use crate::spectral::{from_grid, to_grid, Grid, SineSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Linear,
    Oracle,
    Asymptotics,
    Invariants,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["linear", "oracle", "asymptotics", "invariants", "all"];

    fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Oracle => "oracle",
            Self::Asymptotics => "asymptotics",
            Self::Invariants => "invariants",
            Self::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "oracle" => Ok(Self::Oracle),
            "asymptotics" => Ok(Self::Asymptotics),
            "invariants" => Ok(Self::Invariants),
            "all" => Ok(Self::All),
            _ => Err(Error::InvalidArgument(format!(
                "unknown suite {s:?}; expected one of {}",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: Suite, name: &str, outcome: Result<(bool, String)>) -> Check {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Check {
        suite,
        name: name.to_string(),
        passed,
        detail,
    }
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Linear => linear(),
        Suite::Oracle => oracle(),
        Suite::Asymptotics => asymptotics(),
        Suite::Invariants => invariants(),
        Suite::All => [linear(), oracle(), asymptotics(), invariants()].concat(),
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub fn format_table(checks: &[Check]) -> String {
    let mut out = String::from("STATUS\tSUITE\tCHECK\tDETAIL\n");
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "{status}\t{}\t{}\t{}\n",
            c.suite, c.name, c.detail
        ));
    }
    out
}

fn linear_problem(e: SineSeries) -> Result<ProblemSpec> {
    ProblemSpec::new(e.length(), 1, e, Nonlinearity::zero())
}

fn linear() -> Vec<Check> {
    let s = Suite::Linear;
    vec![
        check(
            s,
            "mu_exact_random_xi",
            (|| {
                let p = linear_problem(SineSeries::zeros(1.0, 2))?;
                let solver = Solver::new(&p, SolverSettings::default())?;
                let zero = SineSeries::zeros(1.0, 64);
                let mut rng = ChaCha8Rng::seed_from_u64(1);
                let (mut dmu, mut du): (f64, f64) = (0.0, 0.0);
                for _ in 0..20 {
                    let xi = rng.gen_range(-10.0..10.0);
                    let pt = solver.solve(xi, &zero)?;
                    dmu = dmu.max((pt.mu + PI * PI * xi).abs());
                    du = du.max(pt.remainder.l2_norm());
                }
                Ok((
                    dmu < 1e-10 && du < 1e-12,
                    format!("max |mu + lambda1 xi| = {dmu:.2e}, max ||U|| = {du:.2e}"),
                ))
            })(),
        ),
        check(
            s,
            "forced_modal_solution",
            (|| {
                let e = SineSeries::from_modes(1.0, 3, &[(2, 1.0), (3, 0.5)])?;
                let p = linear_problem(e)?;
                let pt = Solver::new(&p, SolverSettings::default())?
                    .solve(2.0, &SineSeries::zeros(1.0, 64))?;
                let err = (pt.remainder.coeff(2) + 1.0 / (4.0 * PI * PI))
                    .abs()
                    .max((pt.remainder.coeff(3) + 0.5 / (9.0 * PI * PI)).abs());
                Ok((
                    pt.converged && pt.newton_iters == 1 && err < 1e-14,
                    format!(
                        "coefficient error {err:.2e}, {} iteration(s)",
                        pt.newton_iters
                    ),
                ))
            })(),
        ),
        check(
            s,
            "linear_curve_single_crossing",
            (|| {
                let p = linear_problem(SineSeries::zeros(1.0, 2))?;
                let c = follow_curve(&p, -2.0, 2.0, 0.5, &SolverSettings::default())?;
                let n = count_solutions(&c, 0.0);
                Ok((
                    n == 1 && c.gaps.is_empty(),
                    format!("{n} crossing(s) of mu = 0"),
                ))
            })(),
        ),
    ]
}

/// Sup distance between the spectral solution and the shooting trajectory on
/// the shooting grid, and `|mu_shoot - mu_spectral|`.
pub fn oracle_distance(p: &ProblemSpec, xi: f64, settings: &SolverSettings) -> Result<(f64, f64)> {
    let pt =
        Solver::new(p, *settings)?.solve(xi, &SineSeries::zeros(p.length(), settings.modes))?;
    if !pt.converged {
        return Err(Error::InvalidArgument(format!(
            "spectral solve failed at xi = {xi}: {:?}",
            pt.failure
        )));
    }
    let r = shoot(p, xi)?;
    if !r.converged {
        return Err(Error::InvalidArgument(format!(
            "shooting failed at xi = {xi}"
        )));
    }
    let u = pt.solution(p.k());
    let sup = r
        .grid
        .iter()
        .zip(&r.grid_solution)
        .map(|(&x, &v)| (u.eval(x) - v).abs())
        .fold(0.0, f64::max);
    Ok((sup, (r.mu - pt.mu).abs()))
}

/// Signature set used for solver/oracle agreement.
pub const ORACLE_XI: [f64; 5] = [-10.0, -3.0, 0.0, 3.0, 10.0];

/// Resolution for solver/oracle agreement; see the README on coefficient decay.
pub fn oracle_settings() -> SolverSettings {
    SolverSettings::default().with_modes(256)
}

fn oracle() -> Vec<Check> {
    let s = Suite::Oracle;
    let mut out = Vec::new();
    for name in CATALOG {
        out.push(check(
            s,
            &format!("agreement_{name}"),
            (|| {
                let p = catalog(name)?;
                let (mut sup, mut dmu): (f64, f64) = (0.0, 0.0);
                for xi in ORACLE_XI {
                    let (a, b) = oracle_distance(&p, xi, &oracle_settings())?;
                    sup = sup.max(a);
                    dmu = dmu.max(b);
                }
                Ok((
                    sup < 1e-6 && dmu < 1e-8,
                    format!("sup error {sup:.2e}, |dmu| {dmu:.2e}"),
                ))
            })(),
        ));
    }
    out.push(check(
        s,
        "rk4_order",
        (|| {
            let p = linear_problem(SineSeries::zeros(1.0, 2))?;
            let d1 = integrate(&p, PI, -PI * PI, 100)
                .last()
                .copied()
                .unwrap_or(0.0)
                .abs();
            let d2 = integrate(&p, PI, -PI * PI, 200)
                .last()
                .copied()
                .unwrap_or(0.0)
                .abs();
            let ratio = d1 / d2;
            Ok((
                (12.0..20.0).contains(&ratio),
                format!("defect ratio {ratio:.2} on step halving"),
            ))
        })(),
    ));
    out
}

/// `|stationary_phase - quadrature|` for `int_{-1}^1 exp(i lambda x^2)`.
pub fn fresnel_error(lambda: f64) -> Result<f64> {
    let g = |x: f64| x * x;
    let dg = |x: f64| 2.0 * x;
    let d2g = |_: f64| 2.0;
    let phase = Phase {
        g: &g,
        dg: &dg,
        d2g: &d2g,
    };
    let approx = stationary_phase(&|_| 1.0, &phase, (-1.0, 1.0), lambda, None)?;
    let exact = oscillatory_quadrature(&|_| 1.0, &g, lambda, (-1.0, 1.0))?;
    Ok((approx - exact).norm())
}

/// `2 Im sum` of the stationary-phase terms of
/// `int_0^L sin(k pi x / L) exp(i xi sin(k pi x / L)) dx`, one per half period.
pub fn higher_k_stationary_sum(k: usize, length: f64, xi: f64) -> Result<f64> {
    let w = k as f64 * PI / length;
    let g = move |x: f64| (w * x).sin();
    let dg = move |x: f64| w * (w * x).cos();
    let d2g = move |x: f64| -w * w * (w * x).sin();
    let phase = Phase {
        g: &g,
        dg: &dg,
        d2g: &d2g,
    };
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..k {
        let a = j as f64 * length / k as f64;
        let b = (j + 1) as f64 * length / k as f64;
        let x0 = 0.5 * (a + b);
        total += stationary_phase(&g, &phase, (a, b), xi, Some(x0))?;
    }
    Ok(2.0 / length * total.im)
}

fn asymptotics() -> Vec<Check> {
    let s = Suite::Asymptotics;
    vec![
        check(
            s,
            "zero_crossing_alignment",
            (|| {
                let p = catalog("oscillatory-p512")?;
                let a = p.asymptote().expect("catalog entry has an asymptote");
                let mut worst: f64 = 0.0;
                for n in 1..=20 {
                    let z = FRAC_PI_4 + n as f64 * PI;
                    let root = bisect(|x| a.mu(x).unwrap_or(f64::NAN), z - 0.5, z + 0.5);
                    worst = worst.max((root - z).abs());
                }
                Ok((
                    worst < 1e-12,
                    format!("max |zero - (pi/4 + n pi)| = {worst:.2e}"),
                ))
            })(),
        ),
        check(
            s,
            "envelope_bound",
            (|| {
                let a = AsymptoticCurve::higher_k(7, 1.0);
                let mut ok = true;
                for i in 1..=2000 {
                    let xi = 0.05 * i as f64;
                    ok &= a.mu(xi)?.abs() <= envelope(xi) * (1.0 + 1e-15);
                }
                let mut touch: f64 = 0.0;
                for n in 0..20 {
                    let xi = 3.0 * FRAC_PI_4 + n as f64 * PI;
                    touch = touch.max((a.mu(xi)?.abs() - envelope(xi)).abs() / envelope(xi));
                }
                Ok((
                    ok && touch < 1e-12,
                    format!("bounded: {ok}, max relative gap at sin = +-1: {touch:.2e}"),
                ))
            })(),
        ),
        check(
            s,
            "higher_k_stationary_phase",
            (|| {
                let xi = 3.0 * FRAC_PI_4;
                let a = AsymptoticCurve::higher_k(7, 1.0).mu(xi)?;
                let sp = higher_k_stationary_sum(7, 1.0, xi)?;
                Ok((
                    (a - sp).abs() < 1e-12,
                    format!("formula {a:.15}, summed stationary phase {sp:.15}"),
                ))
            })(),
        ),
        check(
            s,
            "stationary_phase_order",
            (|| {
                let e: Vec<f64> = [100.0, 200.0, 400.0]
                    .iter()
                    .map(|&l| fresnel_error(l))
                    .collect::<Result<_>>()?;
                let (r1, r2) = (e[0] / e[1], e[1] / e[2]);
                let ok = (1.5..=3.0).contains(&r1) && (1.5..=3.0).contains(&r2);
                Ok((ok, format!("err ratios {r1:.3}, {r2:.3}")))
            })(),
        ),
    ]
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn invariants() -> Vec<Check> {
    let s = Suite::Invariants;
    vec![
        check(
            s,
            "spectral_round_trip",
            (|| {
                let mut rng = ChaCha8Rng::seed_from_u64(2);
                let a = SineSeries::new(1.7, (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
                let grid = Grid::gauss_legendre(1.7, 96)?;
                let back = from_grid(&to_grid(&a, &grid)?, &grid, 24)?;
                let err = a.max_coeff_diff(&back);
                Ok((err < 1e-12, format!("max coefficient error {err:.2e}")))
            })(),
        ),
        check(
            s,
            "remainder_orthogonal_and_verified",
            (|| {
                let p = catalog("amann-hess-type")?;
                let settings = SolverSettings::default();
                let c = follow_curve(&p, -10.0, 10.0, 1.0, &settings)?;
                let solver = Solver::new(&p, settings)?;
                let mut ok = c.gaps.is_empty();
                for pt in &c.points {
                    ok &= pt.remainder.coeff(1) == 0.0;
                    ok &= solver.residual_norm(pt.xi, &pt.remainder)? < settings.newton_tol;
                }
                Ok((ok, format!("{} points checked", c.points.len())))
            })(),
        ),
        check(
            s,
            "amann_hess_bounded_below",
            (|| {
                let p = catalog("amann-hess-type")?;
                let c = follow_curve(&p, -40.0, 40.0, 0.5, &SolverSettings::default())?;
                let m = c.mus().into_iter().fold(f64::INFINITY, f64::min);
                Ok((
                    m > -50.0 && c.gaps.is_empty(),
                    format!("min sampled mu = {m:.6}"),
                ))
            })(),
        ),
        check(
            s,
            "cubic_decreasing",
            (|| {
                let p = catalog("cubic")?;
                let c = follow_curve(&p, -3.0, 3.0, 0.05, &SolverSettings::default())?;
                let mus = c.mus();
                let ok = c.gaps.is_empty() && mus.windows(2).all(|w| w[1] < w[0]);
                Ok((ok, format!("{} nodes", mus.len())))
            })(),
        ),
        check(
            s,
            "resonant_bounded_signs",
            (|| {
                let p = catalog("resonant-bounded")?;
                let c = follow_curve(&p, -30.0, 30.0, 0.5, &SolverSettings::default())?;
                let lo = c.points.first().map(|q| q.mu).unwrap_or(f64::NAN);
                let hi = c.points.last().map(|q| q.mu).unwrap_or(f64::NAN);
                Ok((
                    lo < 0.0 && hi > 0.0,
                    format!("mu(-30) = {lo:.6}, mu(30) = {hi:.6}"),
                ))
            })(),
        ),
        check(
            s,
            "k7_uniqueness",
            (|| {
                let d = k7_warm_start_spread(10.0, 10, 3)?;
                Ok((d < 1e-8, format!("max pairwise sup distance {d:.2e}")))
            })(),
        ),
        check(
            s,
            "resolution_doubling",
            (|| {
                let mut worst: f64 = 0.0;
                let mut at = "";
                for name in CATALOG {
                    let p = catalog(name)?;
                    for xi in [-40.0, -20.0, 0.0, 20.0, 40.0] {
                        let d = resolution_change(&p, xi, resolved_modes(name))?;
                        if d > worst {
                            worst = d;
                            at = name;
                        }
                    }
                }
                Ok((
                    worst < 1e-8,
                    format!(
                        "max |mu(N) - mu(2N)| = {worst:.2e} ({at}); N = 64, resonance-k7 N = 512"
                    ),
                ))
            })(),
        ),
    ]
}

/// Smallest `N` at which a catalog problem is resolved for `|xi| <= 40`.
/// `sin(xi sin 7 pi x)` carries Bessel harmonics up to order about `xi`,
/// i.e. sine modes up to roughly 300, so the k = 7 entry needs far more
/// than the default 64.
pub fn resolved_modes(name: &str) -> usize {
    if name == "resonance-k7" {
        512
    } else {
        64
    }
}

/// Largest pairwise sup distance between remainders reached from `starts`
/// random warm starts with `||U0|| <= 5`.
pub fn k7_warm_start_spread(xi: f64, starts: usize, seed: u64) -> Result<f64> {
    let p = catalog("resonance-k7")?;
    let settings = SolverSettings::default();
    let solver = Solver::new(&p, settings)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    let mut sols: Vec<Vec<f64>> = Vec::new();
    for _ in 0..starts {
        let mut c: Vec<f64> = (1..=settings.modes)
            .map(|j| rng.gen_range(-1.0..1.0) / j as f64)
            .collect();
        c[6] = 0.0;
        let mut u0 = SineSeries::new(1.0, c)?;
        let norm = u0.l2_norm();
        u0 = &u0 * (rng.gen_range(0.0..5.0) / norm);
        let pt = solver.solve(xi, &u0)?;
        if !pt.converged {
            return Err(Error::InvalidArgument(format!(
                "warm start failed: {:?}",
                pt.failure
            )));
        }
        sols.push(grid.iter().map(|&x| pt.remainder.eval(x)).collect());
    }
    let mut worst: f64 = 0.0;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            let d = sols[i]
                .iter()
                .zip(&sols[j])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// `|mu|` change when `modes` is doubled, both solves from a zero start.
pub fn resolution_change(p: &ProblemSpec, xi: f64, modes: usize) -> Result<f64> {
    let mut mus = [0.0; 2];
    for (i, n) in [modes, 2 * modes].into_iter().enumerate() {
        let settings = SolverSettings::default().with_modes(n);
        let pt = Solver::new(p, settings)?.solve(xi, &SineSeries::zeros(p.length(), n))?;
        if !pt.converged {
            return Err(Error::InvalidArgument(format!(
                "{} at xi = {xi}, N = {n}: {:?}",
                p.name(),
                pt.failure
            )));
        }
        mus[i] = pt.mu;
    }
    Ok((mus[0] - mus[1]).abs())
}
