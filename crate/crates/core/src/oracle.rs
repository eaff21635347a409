//! Reference solutions that share no discretization with [`crate::solver`].
//!
//! [`shoot`] integrates the ODE as an initial value problem with classical
//! RK4 and adjusts `(u'(0), mu)` by Newton until `u(L) = 0` and the `k`-th
//! harmonic, taken by trapezoid quadrature, equals the target `xi`.
//! [`oscillatory_quadrature`] is an adaptive Gauss-Kronrod integrator for
//! `int f exp(i lambda g)`.
//!
//! When the `g'` hypotheses fail the shooting system can have several roots;
//! the one nearest the starting guess is returned.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problems::ProblemSpec;

/// Largest driven harmonic the fixed-step integrator is trusted with.
pub const MAX_SHOOTING_MODE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub steps: usize,
    /// Newton stops once both defects fall below `tol (1 + |xi|)`.
    pub tol: f64,
    /// A run counts as converged when both defects are below this.
    pub accept: f64,
    pub max_iter: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            steps: 10_000,
            tol: 1e-13,
            accept: 1e-9,
            max_iter: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootingResult {
    /// `u'(0)`.
    pub slope: f64,
    pub mu: f64,
    /// Uniform grid `x_i = i L / steps`, `i = 0..=steps`.
    pub grid: Vec<f64>,
    pub grid_solution: Vec<f64>,
    /// `|u(L)|`.
    pub boundary_defect: f64,
    /// `|xi(u) - xi_target|`.
    pub xi_defect: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Samples of `sin(k pi x / L)` and `e(x)` at every half step.
struct Tables {
    length: f64,
    h: f64,
    steps: usize,
    phi: Vec<f64>,
    e: Vec<f64>,
}

impl Tables {
    fn new(p: &ProblemSpec, steps: usize) -> Self {
        let length = p.length();
        let h = length / steps as f64;
        let k = p.k() as f64;
        let e_coeffs = p.forcing().coeffs();
        let mut phi = Vec::with_capacity(2 * steps + 1);
        let mut e = Vec::with_capacity(2 * steps + 1);
        for i in 0..=2 * steps {
            let x = 0.5 * h * i as f64;
            let theta = PI * x / length;
            phi.push((k * theta).sin());
            e.push(
                e_coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(j, c)| c * ((j + 1) as f64 * theta).sin())
                    .sum(),
            );
        }
        Self {
            length,
            h,
            steps,
            phi,
            e,
        }
    }

    /// RK4 trajectory `u(x_i)` for `u(0) = 0, u'(0) = s`.
    fn integrate(&self, p: &ProblemSpec, s: f64, mu: f64) -> Vec<f64> {
        let nl = p.nonlinearity();
        let h = self.h;
        let rhs = |u: f64, i: usize| -nl.g(u) + mu * self.phi[i] + self.e[i];
        let mut u = 0.0;
        let mut v = s;
        let mut out = Vec::with_capacity(self.steps + 1);
        out.push(u);
        for n in 0..self.steps {
            let (i0, i1, i2) = (2 * n, 2 * n + 1, 2 * n + 2);
            let k1u = v;
            let k1v = rhs(u, i0);
            let k2u = v + 0.5 * h * k1v;
            let k2v = rhs(u + 0.5 * h * k1u, i1);
            let k3u = v + 0.5 * h * k2v;
            let k3v = rhs(u + 0.5 * h * k2u, i1);
            let k4u = v + h * k3v;
            let k4v = rhs(u + h * k3u, i2);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            out.push(u);
        }
        out
    }

    /// `(2/L) int u phi_k` by the trapezoid rule.
    fn harmonic(&self, u: &[f64]) -> f64 {
        let n = self.steps;
        let mut sum = 0.5 * (u[0] * self.phi[0] + u[n] * self.phi[2 * n]);
        sum += u[1..n]
            .iter()
            .zip(self.phi[2..].iter().step_by(2))
            .map(|(a, b)| a * b)
            .sum::<f64>();
        2.0 / self.length * self.h * sum
    }

    fn defects(&self, p: &ProblemSpec, s: f64, mu: f64, xi: f64) -> [f64; 2] {
        let u = self.integrate(p, s, mu);
        [u[self.steps], self.harmonic(&u) - xi]
    }
}

/// RK4 trajectory for given `(u'(0), mu)`, on `steps` uniform steps.
pub fn integrate(p: &ProblemSpec, slope: f64, mu: f64, steps: usize) -> Vec<f64> {
    Tables::new(p, steps.max(1)).integrate(p, slope, mu)
}

pub fn shoot(p: &ProblemSpec, xi_target: f64) -> Result<ShootingResult> {
    shoot_with(p, xi_target, &ShootingOptions::default())
}

pub fn shoot_with(
    p: &ProblemSpec,
    xi_target: f64,
    opts: &ShootingOptions,
) -> Result<ShootingResult> {
    if p.k() > MAX_SHOOTING_MODE {
        return Err(Error::InvalidArgument(format!(
            "shooting supports k <= {MAX_SHOOTING_MODE}, got {}",
            p.k()
        )));
    }
    if opts.steps == 0 || !xi_target.is_finite() {
        return Err(Error::InvalidArgument(
            "need steps >= 1 and finite xi".into(),
        ));
    }
    let t = Tables::new(p, opts.steps);
    let guess = initial_guess(p, &t, xi_target);
    let mut best = newton(p, &t, xi_target, guess, opts);
    if !best.2 {
        if let Some(h) = homotopy(p, &t, xi_target, opts) {
            best = h;
        }
    }
    let (s, mu, converged, iterations) = best;
    let u = t.integrate(p, s, mu);
    let boundary_defect = u[t.steps].abs();
    let xi_defect = (t.harmonic(&u) - xi_target).abs();
    let grid = (0..=t.steps).map(|i| i as f64 * t.h).collect();
    Ok(ShootingResult {
        slope: s,
        mu,
        grid,
        grid_solution: u,
        boundary_defect,
        xi_defect,
        iterations,
        converged,
    })
}

/// Continuation in `xi` from 0 with a secant predictor and adaptive steps.
/// Needed when `u(L)` is so sensitive to `s` that only a very close starting
/// guess avoids blow-up, e.g. the cubic problem at `|xi| = 10`.
fn homotopy(
    p: &ProblemSpec,
    t: &Tables,
    xi_target: f64,
    opts: &ShootingOptions,
) -> Option<(f64, f64, bool, usize)> {
    let start = newton(p, t, 0.0, initial_guess(p, t, 0.0), opts);
    // Intermediate points only need the acceptance level. A good predictor
    // gets there in a few steps; slow progress means the increment is too
    // large, and halving it is cheaper than persisting.
    let sub = ShootingOptions {
        tol: opts.tol.max(opts.accept / 8.0),
        max_iter: opts.max_iter.min(10),
        ..*opts
    };
    if !start.2 {
        return None;
    }
    let mut hist = vec![(0.0, start.0, start.1)];
    let mut iters = start.3;
    let mut step = xi_target / 32.0;
    let min_step = 1e-4 * (1.0 + xi_target.abs());
    let mut last = start;
    loop {
        let x0 = hist.last().unwrap().0;
        if x0 == xi_target {
            let polished = newton(p, t, xi_target, (last.0, last.1), opts);
            let best = if polished.2 { polished } else { last };
            return Some((best.0, best.1, true, iters + polished.3));
        }
        let xi = if (xi_target - x0).abs() <= step.abs() {
            xi_target
        } else {
            x0 + step
        };
        // Lagrange extrapolation through the last (up to) three points.
        let tail = &hist[hist.len().saturating_sub(3)..];
        let mut guess = (0.0, 0.0);
        for (i, &(xa, sa, ma)) in tail.iter().enumerate() {
            let w: f64 = tail
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &(xb, _, _))| (xi - xb) / (xa - xb))
                .product();
            guess.0 += w * sa;
            guess.1 += w * ma;
        }
        let r = newton(p, t, xi, guess, &sub);
        iters += r.3;
        if r.2 {
            hist.push((xi, r.0, r.1));
            last = r;
            step = (step * 1.5).clamp(-xi_target.abs() / 8.0, xi_target.abs() / 8.0);
        } else {
            step *= 0.5;
            if step.abs() < min_step {
                return None;
            }
        }
    }
}

/// `s = xi k pi / L`, and `mu` from projecting the equation for
/// `u = xi phi_k`.
fn initial_guess(p: &ProblemSpec, t: &Tables, xi: f64) -> (f64, f64) {
    let kpl = p.k() as f64 * PI / t.length;
    let u: Vec<f64> = (0..=t.steps).map(|i| xi * t.phi[2 * i]).collect();
    let gu: Vec<f64> = u.iter().map(|&v| p.nonlinearity().g(v)).collect();
    (xi * kpl, -kpl * kpl * xi + t.harmonic(&gu))
}

fn newton(
    p: &ProblemSpec,
    t: &Tables,
    xi: f64,
    start: (f64, f64),
    opts: &ShootingOptions,
) -> (f64, f64, bool, usize) {
    let scale = 1.0 + xi.abs();
    let size = |f: [f64; 2]| f[0].abs().max(f[1].abs());
    let (mut s, mut mu) = start;
    let mut f = t.defects(p, s, mu, xi);
    let mut iters = 0;
    while iters < opts.max_iter && size(f) >= opts.tol * scale && size(f).is_finite() {
        let hs = 1e-7 * (1.0 + s.abs());
        let hm = 1e-7 * (1.0 + mu.abs());
        let fsp = t.defects(p, s + hs, mu, xi);
        let fsm = t.defects(p, s - hs, mu, xi);
        let fmp = t.defects(p, s, mu + hm, xi);
        let fmm = t.defects(p, s, mu - hm, xi);
        let j = [
            [
                (fsp[0] - fsm[0]) / (2.0 * hs),
                (fmp[0] - fmm[0]) / (2.0 * hm),
            ],
            [
                (fsp[1] - fsm[1]) / (2.0 * hs),
                (fmp[1] - fmm[1]) / (2.0 * hm),
            ],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let ds = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dm = -(-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        let mut damping = 1.0;
        let mut accepted = false;
        while damping >= 1.0 / 1024.0 {
            let (ts, tm) = (s + damping * ds, mu + damping * dm);
            let tf = t.defects(p, ts, tm, xi);
            if size(tf) < size(f) {
                s = ts;
                mu = tm;
                f = tf;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        iters += 1;
        if !accepted {
            break;
        }
    }
    let converged = size(f).is_finite() && size(f) < opts.accept * scale;
    (s, mu, converged, iters)
}

/// Absolute tolerance of [`oscillatory_quadrature`].
pub const QUAD_TOL: f64 = 1e-10;
/// Panel budget of [`oscillatory_quadrature`].
pub const MAX_PANELS: usize = 1 << 17;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights for `XGK[1], XGK[3], XGK[5]` and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// G7K15 on `[a, b]`: Kronrod value and `|K - G|`.
fn gk15(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = hw * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        k += pair * WGK[i];
        if i % 2 == 1 {
            g += pair * WG[i / 2];
        }
    }
    (k * hw, ((k - g) * hw).norm())
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Global adaptive G7K15 starting from `panels` equal panels.
fn adaptive(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
) -> Result<Complex64> {
    if panels > MAX_PANELS {
        return Err(Error::Quadrature(format!(
            "{panels} initial panels exceed the budget of {MAX_PANELS}"
        )));
    }
    let width = (b - a) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(2 * panels);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for i in 0..panels {
        let pa = a + i as f64 * width;
        let pb = if i + 1 == panels {
            b
        } else {
            a + (i + 1) as f64 * width
        };
        let (value, error) = gk15(f, pa, pb);
        total += value;
        err += error;
        heap.push(Panel {
            a: pa,
            b: pb,
            value,
            error,
        });
    }
    while err > tol {
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature(format!(
                "no convergence within {MAX_PANELS} panels (error estimate {err:.3e})"
            )));
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature(format!(
                "panel at {} cannot be split further (error estimate {err:.3e})",
                worst.a
            )));
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed the drift of the running total.
    Ok(heap.iter().map(|p| p.value).sum())
}

/// `int_a^b f(x) exp(i lambda g(x)) dx` to absolute tolerance `1e-10`.
pub fn oscillatory_quadrature(
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    lambda: f64,
    interval: (f64, f64),
) -> Result<Complex64> {
    oscillatory_quadrature_tol(f, g, lambda, interval, QUAD_TOL)
}

/// As [`oscillatory_quadrature`] with an explicit absolute tolerance. Initial
/// panels are at most an eighth of the shortest local period of
/// `exp(i lambda g)`, estimated from sampled slopes of `g`.
pub fn oscillatory_quadrature_tol(
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    lambda: f64,
    interval: (f64, f64),
    tol: f64,
) -> Result<Complex64> {
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && lambda.is_finite()) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(
            "quadrature needs finite data and tol > 0".into(),
        ));
    }
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if a > b {
        return oscillatory_quadrature_tol(f, g, lambda, (b, a), tol).map(|v| -v);
    }
    const SAMPLES: usize = 4096;
    let dx = (b - a) / SAMPLES as f64;
    let mut max_slope: f64 = 0.0;
    let mut prev = g(a);
    for i in 1..=SAMPLES {
        let next = g(a + i as f64 * dx);
        max_slope = max_slope.max(((next - prev) / dx).abs());
        prev = next;
    }
    let omega = lambda.abs() * max_slope;
    let panels = if omega > 0.0 {
        let period = 2.0 * PI / omega;
        ((b - a) / (period / 8.0)).ceil().max(1.0) as usize
    } else {
        1
    };
    let integrand = |x: f64| Complex64::from_polar(f(x), lambda * g(x));
    adaptive(&integrand, a, b, panels, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{catalog, Nonlinearity};
    use crate::spectral::SineSeries;

    fn linear() -> ProblemSpec {
        ProblemSpec::new(1.0, 1, SineSeries::zeros(1.0, 2), Nonlinearity::zero()).unwrap()
    }

    #[test]
    fn shooting_linear_closed_form() {
        let r = shoot(&linear(), 1.0).unwrap();
        assert!(r.converged);
        assert!((r.slope - PI).abs() < 1e-8, "{}", r.slope);
        assert!((r.mu + PI * PI).abs() < 1e-8, "{}", r.mu);
        for (x, u) in r.grid.iter().zip(&r.grid_solution) {
            assert!((u - (PI * x).sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let p = linear();
        let d1 = integrate(&p, PI, -PI * PI, 50).last().unwrap().abs();
        let d2 = integrate(&p, PI, -PI * PI, 100).last().unwrap().abs();
        let ratio = d1 / d2;
        assert!((12.0..20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn shooting_rejects_high_modes() {
        let e = SineSeries::zeros(1.0, 9);
        let p = ProblemSpec::new(1.0, 9, e, Nonlinearity::zero()).unwrap();
        assert!(shoot(&p, 1.0).is_err());
    }

    #[test]
    fn shooting_nonlinear_is_consistent() {
        let p = catalog("cubic").unwrap();
        let r = shoot(&p, 1.5).unwrap();
        assert!(r.converged);
        assert!(r.boundary_defect < 1e-9 && r.xi_defect < 1e-9);
        // halving the RK step barely moves mu
        let fine = shoot_with(
            &p,
            1.5,
            &ShootingOptions {
                steps: 20_000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((fine.mu - r.mu).abs() < 1e-9);
    }

    #[test]
    fn quadrature_trivial_and_fresnel() {
        let v = oscillatory_quadrature(&|_| 1.0, &|_| 0.0, 0.0, (0.0, 1.0)).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);

        let f = |_: f64| 1.0;
        let g = |x: f64| x * x;
        let v = oscillatory_quadrature(&f, &g, 400.0, (-1.0, 1.0)).unwrap();
        let tight = oscillatory_quadrature_tol(&f, &g, 400.0, (-1.0, 1.0), 5e-11).unwrap();
        assert!((v - tight).norm() < 1e-10);
        // leading stationary phase term, remainder O(1/lambda)
        let lead = Complex64::from_polar((PI / 400.0).sqrt(), PI / 4.0);
        assert!((v - lead).norm() < 5.0 / 400.0);

        let s = |x: f64| (PI * x).sin();
        let v = oscillatory_quadrature(&s, &s, 40.0, (0.0, 1.0)).unwrap();
        let tight = oscillatory_quadrature_tol(&s, &s, 40.0, (0.0, 1.0), 5e-11).unwrap();
        assert!((v - tight).norm() < 1e-10);
    }

    #[test]
    fn quadrature_polynomial_exactness_and_reversal() {
        let v =
            oscillatory_quadrature(&|x| x.powi(5) - 3.0 * x, &|_| 0.0, 0.0, (0.0, 2.0)).unwrap();
        assert!((v.re - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
        let r =
            oscillatory_quadrature(&|x| x.powi(5) - 3.0 * x, &|_| 0.0, 0.0, (2.0, 0.0)).unwrap();
        assert_eq!(r, -v);
    }

    #[test]
    fn quadrature_budget_is_reported() {
        let r = oscillatory_quadrature(&|_| 1.0, &|x| x, 1e12, (0.0, 1.0));
        assert!(matches!(r, Err(Error::Quadrature(_))));
    }
}
