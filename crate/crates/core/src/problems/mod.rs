//! Nonlinearities, problem instances and the built-in catalog.
//!
//! A problem is `u'' + g(u) = mu * sin(k pi x / L) + e(x)` on `(0, L)` with
//! `u(0) = u(L) = 0`; `mu` is solved for, everything else is data.

pub mod config;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::AsymptoticCurve;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::spectral::{mode_eigenvalue, SineSeries};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `g(u)` together with `g'(u)`.
#[derive(Clone)]
pub struct Nonlinearity {
    g: ScalarFn,
    g_prime: ScalarFn,
    descriptor: String,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl Nonlinearity {
    pub fn new(
        descriptor: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            g: Arc::new(g),
            g_prime: Arc::new(g_prime),
            descriptor: descriptor.into(),
        }
    }

    /// Parses `src` (see [`crate::expr`]) and differentiates it symbolically.
    pub fn from_expr(src: &str) -> Result<Self> {
        let g = Expr::parse(src)?;
        let dg = g.derivative();
        Ok(Self::new(
            src.trim(),
            move |u| g.eval(u),
            move |u| dg.eval(u),
        ))
    }

    pub fn zero() -> Self {
        Self::new("0", |_| 0.0, |_| 0.0)
    }

    /// `g(u) = c u`.
    pub fn linear(c: f64) -> Self {
        Self::new(format!("{c}*u"), move |u| c * u, move |_| c)
    }

    #[inline]
    pub fn g(&self, u: f64) -> f64 {
        (self.g)(u)
    }

    #[inline]
    pub fn g_prime(&self, u: f64) -> f64 {
        (self.g_prime)(u)
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// Largest relative discrepancy between `g'` and a centered difference of
    /// `g` at `samples` seeded random points in `[lo, hi]`.
    pub fn derivative_error(&self, lo: f64, hi: f64, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                let u: f64 = rng.gen_range(lo..=hi);
                let h = 1e-5 * (1.0 + u.abs());
                let fd = (self.g(u + h) - self.g(u - h)) / (2.0 * h);
                let an = self.g_prime(u);
                (fd - an).abs() / an.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    name: String,
    length: f64,
    k: usize,
    forcing: SineSeries,
    nonlinearity: Nonlinearity,
    asymptote: Option<AsymptoticCurve>,
}

impl ProblemSpec {
    /// Rejects forcings with a nonzero `k`-th coefficient.
    pub fn new(
        length: f64,
        k: usize,
        forcing: SineSeries,
        nonlinearity: Nonlinearity,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument(
                "driven harmonic index must be >= 1".into(),
            ));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interval length must be positive, got {length}"
            )));
        }
        if (forcing.length() - length).abs() > 1e-12 * length {
            return Err(Error::InvalidArgument(format!(
                "forcing is defined on (0, {}) but the problem on (0, {length})",
                forcing.length()
            )));
        }
        let ek = forcing.coeff(k);
        if ek != 0.0 {
            return Err(Error::NotOrthogonal { mode: k, value: ek });
        }
        Ok(Self {
            name: "custom".into(),
            length,
            k,
            forcing,
            nonlinearity,
            asymptote: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_asymptote(mut self, asymptote: AsymptoticCurve) -> Self {
        self.asymptote = Some(asymptote);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn forcing(&self) -> &SineSeries {
        &self.forcing
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn asymptote(&self) -> Option<&AsymptoticCurve> {
        self.asymptote.as_ref()
    }

    /// `lambda_k` for the driven mode.
    pub fn eigenvalue(&self) -> f64 {
        mode_eigenvalue(self.k, self.length)
    }
}

pub const CATALOG: [&str; 5] = [
    "amann-hess-type",
    "oscillatory-p512",
    "resonance-k7",
    "cubic",
    "resonant-bounded",
];

/// Looks up a built-in problem. `cubic` takes an optional constant argument,
/// `cubic(<expr>)`, e.g. `cubic(pi^2/2)`; plain `cubic` means `lambda = pi^2/2`.
pub fn catalog(name: &str) -> Result<ProblemSpec> {
    let name = name.trim();
    let pi2 = PI * PI;
    match name {
        "amann-hess-type" => amann_hess_type(),
        "oscillatory-p512" => oscillatory_p512(),
        "resonance-k7" => resonance_k7(),
        "resonant-bounded" => resonant_bounded(),
        "cubic" => cubic(0.5 * pi2, None),
        _ => {
            if let Some(arg) = name
                .strip_prefix("cubic(")
                .and_then(|r| r.strip_suffix(')'))
            {
                let arg = arg
                    .trim()
                    .trim_start_matches("lambda")
                    .trim_start_matches('=');
                let lambda = Expr::parse(arg)
                    .and_then(|e| e.eval_const())
                    .map_err(|_| Error::UnknownProblem(name.to_string()))?;
                cubic(lambda, None)
            } else {
                Err(Error::UnknownProblem(name.to_string()))
            }
        }
    }
}

/// `g(u) = cos u + u (pi^2 + (2/pi) arctan u + 0.9 sin(ln(u^2 + 1)))`,
/// `e = sin 2 pi x - 2 sin 5 pi x` on `(0, 1)`.
pub fn amann_hess_type() -> Result<ProblemSpec> {
    let pi2 = PI * PI;
    let g = move |u: f64| {
        let l = (u * u + 1.0).ln();
        u.cos() + u * (pi2 + 2.0 / PI * u.atan() + 0.9 * l.sin())
    };
    let dg = move |u: f64| {
        let q = u * u + 1.0;
        let l = q.ln();
        -u.sin()
            + pi2
            + 2.0 / PI * u.atan()
            + 0.9 * l.sin()
            + u * (2.0 / (PI * q) + 0.9 * l.cos() * 2.0 * u / q)
    };
    let e = SineSeries::from_modes(1.0, 5, &[(2, 1.0), (5, -2.0)])?;
    let nl = Nonlinearity::new(
        "cos(u) + u*(pi^2 + (2/pi)*arctan(u) + 0.9*sin(ln(u^2+1)))",
        g,
        dg,
    );
    Ok(ProblemSpec::new(1.0, 1, e, nl)?.with_name("amann-hess-type"))
}

/// `g(u) = pi^2 u + 5 (u^2 + 1)^(5/12) sin u`, `e = 0.2 sin 2 pi x`.
pub fn oscillatory_p512() -> Result<ProblemSpec> {
    let pi2 = PI * PI;
    let h = |u: f64| 5.0 * (u * u + 1.0).powf(5.0 / 12.0);
    let dh = |u: f64| 5.0 * (5.0 / 12.0) * (u * u + 1.0).powf(5.0 / 12.0 - 1.0) * 2.0 * u;
    let nl = Nonlinearity::new(
        "pi^2*u + 5*(u^2+1)^(5/12)*sin(u)",
        move |u| pi2 * u + h(u) * u.sin(),
        move |u| pi2 + dh(u) * u.sin() + h(u) * u.cos(),
    );
    let e = SineSeries::from_modes(1.0, 2, &[(2, 0.2)])?;
    Ok(ProblemSpec::new(1.0, 1, e, nl)?
        .with_name("oscillatory-p512")
        .with_asymptote(AsymptoticCurve::principal("5*(u^2+1)^(5/12)", h)))
}

/// `g(u) = 49 pi^2 u + sin u`, `e = sin 3 pi x - 2 sin 4 pi x`, driven mode 7.
pub fn resonance_k7() -> Result<ProblemSpec> {
    let l7 = 49.0 * PI * PI;
    let nl = Nonlinearity::new(
        "49*pi^2*u + sin(u)",
        move |u| l7 * u + u.sin(),
        move |u| l7 + u.cos(),
    );
    let e = SineSeries::from_modes(1.0, 7, &[(3, 1.0), (4, -2.0)])?;
    Ok(ProblemSpec::new(1.0, 7, e, nl)?
        .with_name("resonance-k7")
        .with_asymptote(AsymptoticCurve::higher_k(7, 1.0)))
}

/// `g(u) = lambda u - u^3`; `e` defaults to `0.3 sin 2 pi x`.
pub fn cubic(lambda: f64, forcing: Option<SineSeries>) -> Result<ProblemSpec> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cubic lambda must be finite, got {lambda}"
        )));
    }
    let e = match forcing {
        Some(e) => e,
        None => SineSeries::from_modes(1.0, 2, &[(2, 0.3)])?,
    };
    let nl = Nonlinearity::new(
        format!("{lambda}*u - u^3"),
        move |u| lambda * u - u * u * u,
        move |u| lambda - 3.0 * u * u,
    );
    Ok(ProblemSpec::new(1.0, 1, e, nl)?.with_name(format!("cubic({lambda})")))
}

/// `g(u) = pi^2 u + u / (1 + u^2)`, `e = 0.3 sin 2 pi x`.
pub fn resonant_bounded() -> Result<ProblemSpec> {
    let pi2 = PI * PI;
    let c = 1.0;
    let nl = Nonlinearity::new(
        "pi^2*u + u/(1+u^2)",
        move |u| pi2 * u + c * u / (1.0 + u * u),
        move |u| {
            let q = 1.0 + u * u;
            pi2 + c * (1.0 - u * u) / (q * q)
        },
    );
    let e = SineSeries::from_modes(1.0, 2, &[(2, 0.3)])?;
    Ok(ProblemSpec::new(1.0, 1, e, nl)?.with_name("resonant-bounded"))
}

/// Numerical check of the growth hypotheses on a sampled `u` range.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub u_range: (f64, f64),
    pub samples: usize,
    pub g_prime_min: f64,
    pub g_prime_max: f64,
    /// `lambda_{k-1}`, absent for `k = 1`.
    pub lambda_below: Option<f64>,
    /// `lambda_{k+1}`.
    pub lambda_above: f64,
    /// `g' < lambda_{k+1}` on every sample.
    pub below_next_eigenvalue: bool,
    /// `lambda_{k-1} < g' < lambda_{k+1}`, for `k >= 2`.
    pub sandwich: Option<bool>,
    /// Tail crossing of `g(u)/u` across `lambda_1`, for `k = 1`.
    pub crossing: Option<CrossingReport>,
    pub finite: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CrossingReport {
    /// Tails are `u <= -threshold` and `u >= threshold`.
    pub threshold: f64,
    /// `sup g(u)/u` on the negative tail.
    pub gamma_lower: f64,
    /// `inf g(u)/u` on the positive tail.
    pub gamma_upper: f64,
    pub holds: bool,
}

/// Samples `g` and `g'` on 10^4 points of `u_range`. Advisory only.
pub fn validate_conditions(p: &ProblemSpec, u_range: (f64, f64)) -> ConditionReport {
    const SAMPLES: usize = 10_000;
    let (lo, hi) = if u_range.0 <= u_range.1 {
        u_range
    } else {
        (u_range.1, u_range.0)
    };
    let nl = p.nonlinearity();
    let k = p.k();
    let length = p.length();
    let us: Vec<f64> = (0..SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64)
        .collect();
    let dg: Vec<f64> = us.iter().map(|&u| nl.g_prime(u)).collect();
    let finite = dg.iter().all(|v| v.is_finite()) && us.iter().all(|&u| nl.g(u).is_finite());
    let g_prime_min = dg.iter().copied().fold(f64::INFINITY, f64::min);
    let g_prime_max = dg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda_above = mode_eigenvalue(k + 1, length);
    let lambda_below = (k >= 2).then(|| mode_eigenvalue(k - 1, length));
    let below_next_eigenvalue = finite && g_prime_max < lambda_above;
    let sandwich = lambda_below.map(|lb| below_next_eigenvalue && g_prime_min > lb);

    let crossing = (k == 1).then(|| {
        let threshold = 0.5 * lo.abs().max(hi.abs());
        let ratio = |u: f64| nl.g(u) / u;
        let gamma_lower = us
            .iter()
            .filter(|&&u| u <= -threshold)
            .map(|&u| ratio(u))
            .fold(f64::NEG_INFINITY, f64::max);
        let gamma_upper = us
            .iter()
            .filter(|&&u| u >= threshold)
            .map(|&u| ratio(u))
            .fold(f64::INFINITY, f64::min);
        let l1 = mode_eigenvalue(1, length);
        let holds = gamma_lower.is_finite()
            && gamma_upper.is_finite()
            && gamma_lower > 0.0
            && gamma_lower < l1
            && l1 < gamma_upper;
        CrossingReport {
            threshold,
            gamma_lower,
            gamma_upper,
            holds,
        }
    });

    ConditionReport {
        u_range: (lo, hi),
        samples: SAMPLES,
        g_prime_min,
        g_prime_max,
        lambda_below,
        lambda_above,
        below_next_eigenvalue,
        sandwich,
        crossing,
        finite,
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "g' on [{}, {}] ({} samples): min {:.6}, max {:.6}",
            self.u_range.0, self.u_range.1, self.samples, self.g_prime_min, self.g_prime_max
        )?;
        writeln!(
            f,
            "g' < lambda_(k+1) = {:.6}: {}",
            self.lambda_above, self.below_next_eigenvalue
        )?;
        if let (Some(lb), Some(s)) = (self.lambda_below, self.sandwich) {
            writeln!(f, "lambda_(k-1) = {lb:.6} < g' < lambda_(k+1): {s}")?;
        }
        if let Some(c) = &self.crossing {
            writeln!(
                f,
                "tail crossing (|u| >= {}): sup g/u below = {:.6}, inf g/u above = {:.6}, holds: {}",
                c.threshold, c.gamma_lower, c.gamma_upper, c.holds
            )?;
        }
        if !self.finite {
            writeln!(f, "warning: g or g' is not finite somewhere on the range")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_entries() {
        let p = catalog("resonance-k7").unwrap();
        assert_eq!(p.k(), 7);
        let p = catalog("oscillatory-p512").unwrap();
        assert_eq!(p.forcing().coeff(1), 0.0);
        assert_eq!(p.forcing().coeff(2), 0.2);
        assert_eq!(p.forcing().coeff(3), 0.0);
        let p = catalog("cubic(0)").unwrap();
        assert_eq!(p.nonlinearity().g(2.0), -8.0);
        let p = catalog("cubic(lambda=pi^2/2)").unwrap();
        assert!((p.nonlinearity().g_prime(0.0) - PI * PI / 2.0).abs() < 1e-14);
        assert!(matches!(catalog("nope"), Err(Error::UnknownProblem(_))));
        assert!(matches!(catalog("cubic(u)"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn catalog_forcings_are_orthogonal_and_derivatives_consistent() {
        for name in CATALOG {
            let p = catalog(name).unwrap();
            assert_eq!(p.forcing().coeff(p.k()), 0.0, "{name}");
            let err = p.nonlinearity().derivative_error(-50.0, 50.0, 100, 7);
            assert!(err < 1e-5, "{name}: {err}");
        }
    }

    #[test]
    fn problem_rejects_driven_forcing() {
        let e = SineSeries::from_modes(1.0, 3, &[(1, 0.1)]).unwrap();
        assert!(matches!(
            ProblemSpec::new(1.0, 1, e, Nonlinearity::zero()),
            Err(Error::NotOrthogonal { mode: 1, .. })
        ));
    }

    #[test]
    fn sandwich_for_resonance_k7() {
        let p = catalog("resonance-k7").unwrap();
        let r = validate_conditions(&p, (-100.0, 100.0));
        assert_eq!(r.sandwich, Some(true));
        let pi2 = PI * PI;
        assert!(r.g_prime_min >= 49.0 * pi2 - 1.0 - 1e-12);
        assert!(r.g_prime_max <= 49.0 * pi2 + 1.0 + 1e-12);
        assert!(36.0 * pi2 < r.g_prime_min && r.g_prime_max < 64.0 * pi2);
    }

    #[test]
    fn cubic_below_second_eigenvalue() {
        let p = catalog("cubic(pi^2/2)").unwrap();
        let r = validate_conditions(&p, (-10.0, 10.0));
        assert!(r.below_next_eigenvalue);
        assert!(r.g_prime_max <= PI * PI / 2.0 + 1e-12);
    }

    #[test]
    fn amann_hess_tail_crossing() {
        let p = catalog("amann-hess-type").unwrap();
        let r = validate_conditions(&p, (-50.0, 50.0));
        let c = r.crossing.unwrap();
        // Independent scan of g(u)/u on the same tails.
        let g =
            |u: f64| u.cos() / u + PI * PI + 2.0 / PI * u.atan() + 0.9 * (u * u + 1.0).ln().sin();
        let lower = (0..=25_000)
            .map(|i| -50.0 + 25.0 * i as f64 / 25_000.0)
            .map(g)
            .fold(f64::NEG_INFINITY, f64::max);
        let upper = (0..=25_000)
            .map(|i| 25.0 + 25.0 * i as f64 / 25_000.0)
            .map(g)
            .fold(f64::INFINITY, f64::min);
        assert!(lower < PI * PI && PI * PI < upper);
        assert!((c.gamma_lower - lower).abs() < 1e-3);
        assert!((c.gamma_upper - upper).abs() < 1e-3);
        assert!(c.holds);
        assert!(r.below_next_eigenvalue);
    }

    #[test]
    fn expression_nonlinearity() {
        let nl = Nonlinearity::from_expr("pi^2*u + 5*(u^2+1)^(5/12)*sin(u)").unwrap();
        let cat = catalog("oscillatory-p512").unwrap();
        for &u in &[-7.0, 0.3, 12.5] {
            assert!((nl.g(u) - cat.nonlinearity().g(u)).abs() < 1e-12);
            assert!((nl.g_prime(u) - cat.nonlinearity().g_prime(u)).abs() < 1e-12);
        }
        assert!(nl.derivative_error(-50.0, 50.0, 100, 3) < 1e-5);
    }
}
