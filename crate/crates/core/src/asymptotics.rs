//! Large-`xi` predictions for oscillatory nonlinearities.
//!
//! For `u'' + lambda_1 u + h(u) sin u = mu sin(pi x / L) + e(x)` the curve
//! behaves like `mu ~ 2 sqrt(2) / sqrt(pi |xi|) * sin(xi -+ pi/4) * h(xi)`,
//! and for `u'' + lambda_k u + sin u = ...` like the same expression with
//! `h = 1`. Both come from a one-point stationary phase estimate of the
//! projection integral. The `(1 + o(1))` correction inside `h` is dropped:
//! `h` is evaluated at `xi` itself.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problems::ScalarFn;
use crate::spectral::{modal_linear_solve, mode_eigenvalue, SineSeries};

#[derive(Clone)]
pub enum AsymptoticCurve {
    /// Driven mode 1 with perturbation `h(u) sin u`.
    Principal { h: ScalarFn, descriptor: String },
    /// Driven mode `k` with perturbation `sin u`.
    HigherK { k: usize, length: f64 },
}

impl fmt::Debug for AsymptoticCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Principal { descriptor, .. } => write!(f, "Principal(h = {descriptor})"),
            Self::HigherK { k, length } => write!(f, "HigherK(k = {k}, L = {length})"),
        }
    }
}

impl AsymptoticCurve {
    pub fn principal(
        descriptor: impl Into<String>,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::Principal {
            h: Arc::new(h),
            descriptor: descriptor.into(),
        }
    }

    pub fn higher_k(k: usize, length: f64) -> Self {
        Self::HigherK { k, length }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Principal { descriptor, .. } => format!("principal, h(u) = {descriptor}"),
            Self::HigherK { k, .. } => format!("higher harmonic k = {k}"),
        }
    }

    /// Predicted `mu(xi)`; `xi = 0` is rejected.
    pub fn mu(&self, xi: f64) -> Result<f64> {
        if xi == 0.0 || !xi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "asymptotic formula is singular at xi = {xi}"
            )));
        }
        let envelope = envelope(xi);
        let phase = if xi > 0.0 {
            xi - FRAC_PI_4
        } else {
            xi + FRAC_PI_4
        };
        let amplitude = match self {
            Self::Principal { h, .. } => h(xi),
            Self::HigherK { .. } => 1.0,
        };
        Ok(envelope * phase.sin() * amplitude)
    }
}

/// `2 sqrt(2 / (pi |xi|))`.
pub fn envelope(xi: f64) -> f64 {
    2.0 * (2.0 / (PI * xi.abs())).sqrt()
}

pub fn mu_asymptotic(curve: &AsymptoticCurve, xi: f64) -> Result<f64> {
    curve.mu(xi)
}

/// Phase function with its first two derivatives.
pub struct Phase<'a> {
    pub g: &'a dyn Fn(f64) -> f64,
    pub dg: &'a dyn Fn(f64) -> f64,
    pub d2g: &'a dyn Fn(f64) -> f64,
}

/// Root of `g'` on `[a, b]` by bisection to `1e-12` in `x`.
pub fn locate_critical_point(dg: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut flo = dg(lo);
    let fhi = dg(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::InvalidArgument(format!(
            "g' does not change sign on [{a}, {b}]; no interior critical point"
        )));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let fm = dg(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Leading-order estimate of `int_a^b f(x) exp(i lambda g(x)) dx` for a phase
/// with a single nondegenerate interior critical point:
///
/// `exp(i [lambda g(x0) +- pi/4]) sqrt(2 pi / (lambda |g''(x0)|)) f(x0)`,
///
/// with `+` when `g''(x0) > 0`. The remainder is `O(1/lambda)`.
pub fn stationary_phase(
    f: &dyn Fn(f64) -> f64,
    phase: &Phase<'_>,
    interval: (f64, f64),
    lambda: f64,
    critical_point: Option<f64>,
) -> Result<Complex64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let x0 = match critical_point {
        Some(x) => x,
        None => locate_critical_point(phase.dg, interval.0, interval.1)?,
    };
    let curvature = (phase.d2g)(x0);
    if curvature.abs() < 1e-8 {
        return Err(Error::DegenerateCriticalPoint { curvature });
    }
    let shift = if curvature > 0.0 {
        FRAC_PI_4
    } else {
        -FRAC_PI_4
    };
    let arg = lambda * (phase.g)(x0) + shift;
    let magnitude = (2.0 * PI / (lambda * curvature.abs())).sqrt() * f(x0);
    Ok(Complex64::from_polar(1.0, arg) * magnitude)
}

/// `xi sin(pi x / L) + E(x)` where `E'' + lambda_1 E = e`, `E` orthogonal to
/// `sin(pi x / L)`.
pub fn universal_profile(e: &SineSeries, xi: f64) -> Result<SineSeries> {
    let length = e.length();
    let correction = modal_linear_solve(e, mode_eigenvalue(1, length), 1)?;
    let mut out = correction;
    out.coeffs_mut()[0] = xi;
    Ok(out)
}
