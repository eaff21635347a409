//! Dirichlet sine basis on `(0, L)`.
//!
//! A function is stored as coefficients `a_1..a_N` of `sum_j a_j sin(j pi x / L)`.
//! Harmonics are extracted with the `2/L` projection, so `sin(k pi x / L)` has
//! unit coefficient (not unit L2 norm).

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// `k`-th Dirichlet eigenvalue `k^2 pi^2 / L^2` of `-u''` on `(0, L)`.
pub fn eigenvalue(k: usize, length: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("mode index must be >= 1".into()));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "interval length must be positive, got {length}"
        )));
    }
    Ok(mode_eigenvalue(k, length))
}

#[inline]
pub(crate) fn mode_eigenvalue(k: usize, length: f64) -> f64 {
    let w = k as f64 * PI / length;
    w * w
}

#[derive(Debug, Clone, PartialEq)]
pub struct SineSeries {
    length: f64,
    coeffs: Vec<f64>,
}

impl SineSeries {
    pub fn new(length: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interval length must be positive, got {length}"
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "a series needs at least one mode".into(),
            ));
        }
        if let Some(j) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coefficient of mode {} is not finite",
                j + 1
            )));
        }
        Ok(Self { length, coeffs })
    }

    /// Zero series. Panics if `length <= 0` or `modes == 0`.
    pub fn zeros(length: f64, modes: usize) -> Self {
        Self::new(length, vec![0.0; modes]).expect("valid length and mode count")
    }

    /// The basis function `sin(k pi x / L)` in a series of `modes` modes.
    pub fn basis(length: f64, modes: usize, k: usize) -> Self {
        assert!(k >= 1 && k <= modes, "basis mode {k} outside 1..={modes}");
        let mut s = Self::zeros(length, modes);
        s.coeffs[k - 1] = 1.0;
        s
    }

    /// Builds a series from sparse `(mode, coefficient)` pairs.
    pub fn from_modes(length: f64, modes: usize, pairs: &[(usize, f64)]) -> Result<Self> {
        let mut coeffs = vec![0.0; modes];
        for &(j, a) in pairs {
            if j == 0 || j > modes {
                return Err(Error::ModeOutOfRange { mode: j, modes });
            }
            coeffs[j - 1] += a;
        }
        Self::new(length, coeffs)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Coefficient of mode `j` (1-based); zero beyond the stored modes.
    pub fn coeff(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.coeffs.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, j: usize, value: f64) -> Result<()> {
        if j == 0 || j > self.modes() {
            return Err(Error::ModeOutOfRange {
                mode: j,
                modes: self.modes(),
            });
        }
        self.coeffs[j - 1] = value;
        Ok(())
    }

    /// Truncates or zero-pads to `modes` modes.
    pub fn resized(&self, modes: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(modes.max(1), 0.0);
        Self {
            length: self.length,
            coeffs,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let theta = PI * x / self.length;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * ((i + 1) as f64 * theta).sin())
            .sum()
    }

    /// L2 norm on `(0, L)` via Parseval: `sqrt(L/2 * sum a_j^2)`.
    pub fn l2_norm(&self) -> f64 {
        (0.5 * self.length * self.coeffs.iter().map(|a| a * a).sum::<f64>()).sqrt()
    }

    /// `sqrt(L/2 * sum lambda_j^2 a_j^2)`, the L2 norm of `u''`.
    pub fn h2_seminorm(&self) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let w = mode_eigenvalue(i + 1, self.length) * a;
                w * w
            })
            .sum();
        (0.5 * self.length * s).sqrt()
    }

    /// Largest coefficient difference, padding the shorter series with zeros.
    pub fn max_coeff_diff(&self, other: &SineSeries) -> f64 {
        let n = self.modes().max(other.modes());
        (1..=n)
            .map(|j| (self.coeff(j) - other.coeff(j)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&a| a == 0.0)
    }
}

fn zip_with(a: &SineSeries, b: &SineSeries, op: impl Fn(f64, f64) -> f64) -> SineSeries {
    debug_assert!((a.length - b.length).abs() <= 1e-14 * a.length);
    let n = a.modes().max(b.modes());
    let coeffs = (1..=n).map(|j| op(a.coeff(j), b.coeff(j))).collect();
    SineSeries {
        length: a.length,
        coeffs,
    }
}

impl Add for &SineSeries {
    type Output = SineSeries;
    fn add(self, rhs: &SineSeries) -> SineSeries {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &SineSeries {
    type Output = SineSeries;
    fn sub(self, rhs: &SineSeries) -> SineSeries {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Mul<f64> for &SineSeries {
    type Output = SineSeries;
    fn mul(self, rhs: f64) -> SineSeries {
        SineSeries {
            length: self.length,
            coeffs: self.coeffs.iter().map(|a| a * rhs).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// `x_m = m L / (M + 1)`, `m = 1..M`; the DST-I node set.
    Uniform,
    /// Gauss-Legendre nodes mapped to `(0, L)`.
    GaussLegendre,
}

/// Quadrature node set on `(0, L)`.
#[derive(Debug, Clone)]
pub struct Grid {
    length: f64,
    kind: GridKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn uniform(length: f64, points: usize) -> Result<Self> {
        check_grid_args(length, points)?;
        let h = length / (points + 1) as f64;
        Ok(Self {
            length,
            kind: GridKind::Uniform,
            nodes: (1..=points).map(|m| m as f64 * h).collect(),
            weights: vec![h; points],
        })
    }

    pub fn gauss_legendre(length: f64, points: usize) -> Result<Self> {
        check_grid_args(length, points)?;
        let (x, w) = gauss_legendre_rule(points);
        let half = 0.5 * length;
        Ok(Self {
            length,
            kind: GridKind::GaussLegendre,
            nodes: x.iter().map(|t| half * (t + 1.0)).collect(),
            weights: w.iter().map(|w| half * w).collect(),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature of `values` (sampled at the nodes) over `(0, L)`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    fn check_compatible(&self, length: f64, modes: usize) -> Result<()> {
        if (self.length - length).abs() > 1e-12 * length {
            return Err(Error::InvalidArgument(format!(
                "grid length {} does not match series length {}",
                self.length, length
            )));
        }
        if self.len() < 2 * modes {
            return Err(Error::InvalidArgument(format!(
                "grid of {} points cannot resolve {} modes (need at least {})",
                self.len(),
                modes,
                2 * modes
            )));
        }
        Ok(())
    }
}

fn check_grid_args(length: f64, points: usize) -> Result<()> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "interval length must be positive, got {length}"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidArgument(
            "a grid needs at least 2 points".into(),
        ));
    }
    Ok(())
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// ascending in `x`.
pub(crate) fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Values of `s` at the grid nodes, by direct summation.
pub fn to_grid(s: &SineSeries, grid: &Grid) -> Result<Vec<f64>> {
    grid.check_compatible(s.length, s.modes())?;
    Ok(grid.nodes.iter().map(|&x| s.eval(x)).collect())
}

/// Sine coefficients `a_j = (2/L) * sum_m w_m f(x_m) sin(j pi x_m / L)`
/// for `j = 1..modes`.
pub fn from_grid(values: &[f64], grid: &Grid, modes: usize) -> Result<SineSeries> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: values.len(),
        });
    }
    if modes == 0 {
        return Err(Error::InvalidArgument(
            "a series needs at least one mode".into(),
        ));
    }
    grid.check_compatible(grid.length, modes)?;
    let scale = 2.0 / grid.length;
    let theta: Vec<f64> = grid.nodes.iter().map(|x| PI * x / grid.length).collect();
    let coeffs = (1..=modes)
        .map(|j| {
            let jf = j as f64;
            scale
                * values
                    .iter()
                    .zip(&grid.weights)
                    .zip(&theta)
                    .map(|((f, w), t)| f * w * (jf * t).sin())
                    .sum::<f64>()
        })
        .collect();
    SineSeries::new(grid.length, coeffs)
}

/// Splits `s` into its `k`-th harmonic and the remainder orthogonal to `sin(k pi x/L)`.
pub fn project_out(s: &SineSeries, k: usize) -> Result<(f64, SineSeries)> {
    if k == 0 || k > s.modes() {
        return Err(Error::ModeOutOfRange {
            mode: k,
            modes: s.modes(),
        });
    }
    let xi = s.coeffs[k - 1];
    let mut rest = s.clone();
    rest.coeffs[k - 1] = 0.0;
    Ok((xi, rest))
}

/// Solves `w'' + shift * w = rhs` on `(0, L)` with `w(0) = w(L) = 0` and
/// `w` orthogonal to mode `excluded`, one mode at a time:
/// `w_j = r_j / (shift - lambda_j)`.
pub fn modal_linear_solve(rhs: &SineSeries, shift: f64, excluded: usize) -> Result<SineSeries> {
    let scale = rhs.coeffs.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    let r_ex = rhs.coeff(excluded);
    if r_ex.abs() > 1e-12 * (1.0 + scale) {
        return Err(Error::NotOrthogonal {
            mode: excluded,
            value: r_ex,
        });
    }
    let length = rhs.length;
    let mut out = SineSeries::zeros(length, rhs.modes());
    for (i, (&r, w)) in rhs.coeffs.iter().zip(out.coeffs.iter_mut()).enumerate() {
        let j = i + 1;
        if j == excluded || r == 0.0 {
            continue;
        }
        let lambda = mode_eigenvalue(j, length);
        let gap = shift - lambda;
        if gap.abs() < 1e-9 * lambda {
            return Err(Error::Resonance { mode: j, shift });
        }
        *w = r / gap;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues() {
        assert!((eigenvalue(1, 1.0).unwrap() - PI * PI).abs() < 1e-14);
        assert!((eigenvalue(7, 1.0).unwrap() - 49.0 * PI * PI).abs() < 1e-12);
        assert!((eigenvalue(2, 2.0).unwrap() - PI * PI).abs() < 1e-14);
        assert!(eigenvalue(0, 1.0).is_err());
        assert!(eigenvalue(1, 0.0).is_err());
        assert!(eigenvalue(1, -1.0).is_err());
    }

    #[test]
    fn series_rejects_bad_input() {
        assert!(SineSeries::new(0.0, vec![1.0]).is_err());
        assert!(SineSeries::new(1.0, vec![]).is_err());
        assert!(SineSeries::new(1.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn grid_evaluation() {
        let grid = Grid::uniform(1.0, 3).unwrap();
        let s = SineSeries::basis(1.0, 1, 1);
        let v = to_grid(&s, &grid).unwrap();
        assert!((v[1] - 1.0).abs() < 1e-15, "x = 1/2 is the middle node");

        let grid = Grid::uniform(1.0, 16).unwrap();
        let v = to_grid(&SineSeries::zeros(1.0, 8), &grid).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));

        // x = 1/4 is the second node of the 7-point grid
        let grid = Grid::uniform(1.0, 7).unwrap();
        let s = SineSeries::new(1.0, vec![1.0, 0.2]).unwrap();
        let v = to_grid(&s, &grid).unwrap();
        let want = (PI / 4.0).sin() + 0.2 * (PI / 2.0).sin();
        assert!((v[1] - want).abs() < 1e-15);
    }

    #[test]
    fn to_grid_requires_resolution() {
        let grid = Grid::uniform(1.0, 10).unwrap();
        assert!(to_grid(&SineSeries::zeros(1.0, 6), &grid).is_err());
    }

    #[test]
    fn from_grid_basis_and_zero() {
        let grid = Grid::uniform(1.0, 16).unwrap();
        let v: Vec<f64> = grid.nodes().iter().map(|x| (2.0 * PI * x).sin()).collect();
        let s = from_grid(&v, &grid, 4).unwrap();
        let want = [0.0, 1.0, 0.0, 0.0];
        for (a, b) in s.coeffs().iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let s = from_grid(&[0.0; 16], &grid, 4).unwrap();
        assert!(s.is_zero());
        assert!(matches!(
            from_grid(&[0.0; 15], &grid, 4),
            Err(Error::DimensionMismatch {
                expected: 16,
                found: 15
            })
        ));
    }

    #[test]
    fn from_grid_sin_squared() {
        // Hand integration: (2) * int_0^1 sin^2(pi x) sin(j pi x) dx
        //   = -8 / (pi j (j^2 - 4)) for odd j, 0 for even j.
        let oracle = |j: usize| -> f64 {
            if j.is_multiple_of(2) {
                0.0
            } else {
                let jf = j as f64;
                -8.0 / (PI * jf * (jf * jf - 4.0))
            }
        };
        // sin^2 is not band-limited; a fine grid keeps aliasing below 1e-7.
        let grid = Grid::uniform(1.0, 4095).unwrap();
        let v: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| (PI * x).sin().powi(2))
            .collect();
        let s = from_grid(&v, &grid, 8).unwrap();
        for j in 1..=8 {
            assert!((s.coeff(j) - oracle(j)).abs() < 1e-6, "mode {j}");
        }
        // Gauss-Legendre projection is exact for this analytic integrand.
        let gl = Grid::gauss_legendre(1.0, 64).unwrap();
        let v: Vec<f64> = gl.nodes().iter().map(|x| (PI * x).sin().powi(2)).collect();
        let s = from_grid(&v, &gl, 8).unwrap();
        for j in 1..=8 {
            assert!((s.coeff(j) - oracle(j)).abs() < 1e-13, "mode {j}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_rule(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((i - 2.0 / 19.0).abs() < 1e-14);
        let (x, _) = gauss_legendre_rule(7);
        assert_eq!(x[3], 0.0);
    }

    #[test]
    fn projection() {
        let s = SineSeries::new(1.0, vec![3.0, 1.0]).unwrap();
        let (xi, rest) = project_out(&s, 1).unwrap();
        assert_eq!(xi, 3.0);
        assert_eq!(rest.coeffs(), &[0.0, 1.0]);

        for k in 1..=5 {
            let (xi, rest) = project_out(&SineSeries::basis(2.0, 5, k), k).unwrap();
            assert_eq!(xi, 1.0);
            assert!(rest.is_zero());
        }

        let e = SineSeries::from_modes(1.0, 4, &[(2, 0.2)]).unwrap();
        let (xi, rest) = project_out(&e, 1).unwrap();
        assert_eq!(xi, 0.0);
        assert_eq!(rest, e);

        assert!(matches!(
            project_out(&e, 5),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn modal_solves() {
        let pi2 = PI * PI;
        let rhs = SineSeries::from_modes(1.0, 4, &[(2, 1.0)]).unwrap();
        let w = modal_linear_solve(&rhs, pi2, 1).unwrap();
        assert!((w.coeff(2) + 1.0 / (3.0 * pi2)).abs() < 1e-15);
        assert_eq!(w.coeff(1), 0.0);

        let w = modal_linear_solve(&SineSeries::zeros(1.0, 4), pi2, 1).unwrap();
        assert!(w.is_zero());

        // hand division: 1/(49 - 9) pi^-2 and -2/(49 - 16) pi^-2
        let rhs = SineSeries::from_modes(1.0, 8, &[(3, 1.0), (4, -2.0)]).unwrap();
        let w = modal_linear_solve(&rhs, 49.0 * pi2, 7).unwrap();
        assert!((w.coeff(3) - 1.0 / (40.0 * pi2)).abs() < 1e-15);
        assert!((w.coeff(4) + 2.0 / (33.0 * pi2)).abs() < 1e-15);
        assert_eq!(w.coeff(7), 0.0);
    }

    #[test]
    fn modal_solve_errors() {
        let pi2 = PI * PI;
        let rhs = SineSeries::from_modes(1.0, 4, &[(1, 1.0)]).unwrap();
        assert!(matches!(
            modal_linear_solve(&rhs, pi2, 1),
            Err(Error::NotOrthogonal { mode: 1, .. })
        ));
        let rhs = SineSeries::from_modes(1.0, 4, &[(2, 1.0)]).unwrap();
        assert!(matches!(
            modal_linear_solve(&rhs, 4.0 * pi2, 1),
            Err(Error::Resonance { mode: 2, .. })
        ));
        // resonant mode with zero forcing is fine
        let rhs = SineSeries::from_modes(1.0, 4, &[(3, 1.0)]).unwrap();
        assert!(modal_linear_solve(&rhs, 4.0 * pi2, 1).is_ok());
    }

    #[test]
    fn norms() {
        let s = SineSeries::basis(2.0, 3, 1);
        assert!((s.l2_norm() - 1.0).abs() < 1e-15);
        let s = SineSeries::basis(1.0, 3, 2);
        assert!((s.h2_seminorm() - 4.0 * PI * PI / 2f64.sqrt()).abs() < 1e-12);
    }
}
