//! One point of a solution curve.
//!
//! With `u = xi sin(k pi x / L) + U`, `U` orthogonal to the driven mode, the
//! problem splits into a scalar equation for `mu`,
//!
//! ```text
//! mu = -lambda_k xi + (2/L) int_0^L g(u) sin(k pi x / L) dx,
//! ```
//!
//! and the projected equation `P[u'' + g(u) - e] = 0` for `U`, where `P` drops
//! the `k`-th sine coefficient. The projected equation is discretized by
//! Galerkin truncation to `N` sine modes and solved by damped Newton;
//! projection integrals use Gauss-Legendre quadrature, which stays spectrally
//! accurate even when `g(0) != 0`.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::problems::ProblemSpec;
use crate::spectral::{mode_eigenvalue, Grid, SineSeries};

/// Jacobians with a larger condition estimate are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Smallest step factor tried by the halving line search.
    pub min_damping: f64,
    /// Sine modes `N` in the Galerkin truncation.
    pub modes: usize,
    /// Gauss-Legendre nodes; `None` means `4 N`.
    pub quad_nodes: Option<usize>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_iter: 50,
            min_damping: 1.0 / 1024.0,
            modes: 64,
            quad_nodes: None,
        }
    }
}

impl SolverSettings {
    pub fn with_modes(mut self, modes: usize) -> Self {
        self.modes = modes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidArgument("newton_tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.min_damping > 0.0 && self.min_damping <= 1.0) {
            return Err(Error::InvalidArgument(
                "min_damping must lie in (0, 1]".into(),
            ));
        }
        if self.modes < 2 {
            return Err(Error::InvalidArgument(
                "at least 2 modes are required".into(),
            ));
        }
        if let Some(q) = self.quad_nodes {
            if q < 2 * self.modes {
                return Err(Error::InvalidArgument(format!(
                    "{q} quadrature nodes cannot resolve {} modes",
                    self.modes
                )));
            }
        }
        Ok(())
    }

    fn quadrature_nodes(&self) -> usize {
        self.quad_nodes.unwrap_or(4 * self.modes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FailureKind {
    /// `max_iter` Newton steps without reaching `newton_tol`.
    MaxIterations,
    /// No step factor down to `min_damping` reduced the residual.
    LineSearchStalled,
    /// The projected Jacobian is numerically singular. Under the `g'`
    /// hypotheses this cannot happen, so it points at a hypothesis violation.
    SingularJacobian { condition: f64 },
    /// `g` produced a non-finite value.
    NonFinite,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MaxIterations => f.write_str("iteration limit reached"),
            Self::LineSearchStalled => f.write_str("line search stalled"),
            Self::SingularJacobian { condition } => {
                write!(f, "singular Jacobian (condition estimate {condition:.3e})")
            }
            Self::NonFinite => f.write_str("non-finite residual"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolutionPoint {
    pub xi: f64,
    pub mu: f64,
    /// `U`, with the driven coefficient exactly zero.
    pub remainder: SineSeries,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub converged: bool,
    pub failure: Option<FailureKind>,
    /// Condition estimate of the last Jacobian factored (0 if none was).
    pub condition: f64,
}

impl SolutionPoint {
    /// `u = xi phi_k + U` as one series.
    pub fn solution(&self, k: usize) -> SineSeries {
        let mut u = self.remainder.clone();
        u.coeffs_mut()[k - 1] = self.xi;
        u
    }
}

/// Precomputed basis samples at the quadrature nodes.
#[derive(Debug, Clone)]
struct Basis {
    length: f64,
    modes: usize,
    grid: Grid,
    /// `sin(j pi x_q / L)`, row `j - 1`.
    sin: Vec<f64>,
    /// `cos(p pi x_q / L)`, row `p`, `p = 0..=2N`.
    cos: Vec<f64>,
}

impl Basis {
    fn new(length: f64, modes: usize, nodes: usize) -> Result<Self> {
        let grid = Grid::gauss_legendre(length, nodes)?;
        let q = grid.len();
        let mut sin = vec![0.0; modes * q];
        let mut cos = vec![0.0; (2 * modes + 1) * q];
        for (i, &x) in grid.nodes().iter().enumerate() {
            let theta = PI * x / length;
            for j in 1..=modes {
                sin[(j - 1) * q + i] = (j as f64 * theta).sin();
            }
            for p in 0..=2 * modes {
                cos[p * q + i] = (p as f64 * theta).cos();
            }
        }
        Ok(Self {
            length,
            modes,
            grid,
            sin,
            cos,
        })
    }

    fn nodes(&self) -> usize {
        self.grid.len()
    }

    fn sin_row(&self, j: usize) -> &[f64] {
        let q = self.nodes();
        &self.sin[(j - 1) * q..j * q]
    }

    fn cos_row(&self, p: usize) -> &[f64] {
        let q = self.nodes();
        &self.cos[p * q..(p + 1) * q]
    }

    fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.nodes()];
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                for (ui, s) in u.iter_mut().zip(self.sin_row(j + 1)) {
                    *ui += c * s;
                }
            }
        }
        u
    }

    /// `(2/L) int f sin(j pi x / L)` for `j = 1..=N`, from samples of `f`.
    fn project(&self, f: &[f64]) -> Vec<f64> {
        let scale = 2.0 / self.length;
        let fw: Vec<f64> = f
            .iter()
            .zip(self.grid.weights())
            .map(|(a, w)| a * w)
            .collect();
        (1..=self.modes)
            .map(|j| {
                scale
                    * fw.iter()
                        .zip(self.sin_row(j))
                        .map(|(a, s)| a * s)
                        .sum::<f64>()
            })
            .collect()
    }
}

struct Evaluation {
    residual: Vec<f64>,
    mu: f64,
    norm: f64,
    u: Vec<f64>,
}

/// Newton solver for one problem at a fixed resolution.
///
/// Build once and reuse across many `xi`: the basis tables are the expensive
/// part of setup.
#[derive(Debug, Clone)]
pub struct Solver<'p> {
    problem: &'p ProblemSpec,
    settings: SolverSettings,
    basis: Basis,
    lambdas: Vec<f64>,
    forcing: Vec<f64>,
    /// Unknown modes, i.e. `1..=N` without `k`.
    free: Vec<usize>,
}

impl<'p> Solver<'p> {
    pub fn new(problem: &'p ProblemSpec, settings: SolverSettings) -> Result<Self> {
        settings.validate()?;
        let n = settings.modes;
        let k = problem.k();
        if k > n {
            return Err(Error::ModeOutOfRange { mode: k, modes: n });
        }
        let length = problem.length();
        let basis = Basis::new(length, n, settings.quadrature_nodes())?;
        let lambdas = (1..=n).map(|j| mode_eigenvalue(j, length)).collect();
        let forcing = (1..=n).map(|j| problem.forcing().coeff(j)).collect();
        let free = (1..=n).filter(|&j| j != k).collect();
        Ok(Self {
            problem,
            settings,
            basis,
            lambdas,
            forcing,
            free,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn modes(&self) -> usize {
        self.settings.modes
    }

    fn check_remainder(&self, remainder: &SineSeries) -> Result<Vec<f64>> {
        let k = self.problem.k();
        if remainder.coeff(k) != 0.0 {
            return Err(Error::NotOrthogonal {
                mode: k,
                value: remainder.coeff(k),
            });
        }
        Ok(remainder.resized(self.modes()).coeffs().to_vec())
    }

    fn evaluate(&self, xi: f64, coeffs: &[f64]) -> Evaluation {
        let k = self.problem.k();
        let nl = self.problem.nonlinearity();
        let mut full = coeffs.to_vec();
        full[k - 1] = xi;
        let u = self.basis.synthesize(&full);
        let gu: Vec<f64> = u.iter().map(|&v| nl.g(v)).collect();
        let proj = self.basis.project(&gu);
        let mu = -self.lambdas[k - 1] * xi + proj[k - 1];
        let residual: Vec<f64> = (0..self.modes())
            .map(|i| {
                if i == k - 1 {
                    0.0
                } else {
                    -self.lambdas[i] * coeffs[i] + proj[i] - self.forcing[i]
                }
            })
            .collect();
        let norm = (0.5 * self.basis.length * residual.iter().map(|r| r * r).sum::<f64>()).sqrt();
        Evaluation {
            residual,
            mu,
            norm,
            u,
        }
    }

    /// Projected residual `R = P[u'' + g(u) - e]` and `mu` at `(xi, U)`.
    pub fn residual(&self, xi: f64, remainder: &SineSeries) -> Result<(SineSeries, f64)> {
        let coeffs = self.check_remainder(remainder)?;
        let ev = self.evaluate(xi, &coeffs);
        Ok((SineSeries::new(self.basis.length, ev.residual)?, ev.mu))
    }

    /// Discrete L2 norm of the projected residual.
    pub fn residual_norm(&self, xi: f64, remainder: &SineSeries) -> Result<f64> {
        let coeffs = self.check_remainder(remainder)?;
        Ok(self.evaluate(xi, &coeffs).norm)
    }

    /// `J = P[d^2/dx^2 + g'(u)]` on the free modes, in the order of
    /// [`Self::free_modes`].
    fn jacobian_at(&self, u: &[f64]) -> Matrix {
        let nl = self.problem.nonlinearity();
        let n = self.modes();
        let scale = 1.0 / self.basis.length;
        // c_p = (1/L) int g'(u) cos(p pi x / L) dx, then
        // (2/L) int g' s_i s_j = c_{|i-j|} - c_{i+j}.
        let dgw: Vec<f64> = u
            .iter()
            .zip(self.basis.grid.weights())
            .map(|(&v, w)| nl.g_prime(v) * w)
            .collect();
        let c: Vec<f64> = (0..=2 * n)
            .map(|p| {
                scale
                    * dgw
                        .iter()
                        .zip(self.basis.cos_row(p))
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect();
        let m = self.free.len();
        let mut jac = Matrix::zeros(m);
        for (a, &i) in self.free.iter().enumerate() {
            for (b, &j) in self.free.iter().enumerate() {
                let mut v = c[i.abs_diff(j)] - c[i + j];
                if a == b {
                    v -= self.lambdas[i - 1];
                }
                jac.set(a, b, v);
            }
        }
        jac
    }

    pub fn free_modes(&self) -> &[usize] {
        &self.free
    }

    pub fn jacobian(&self, xi: f64, remainder: &SineSeries) -> Result<Matrix> {
        let coeffs = self.check_remainder(remainder)?;
        let ev = self.evaluate(xi, &coeffs);
        Ok(self.jacobian_at(&ev.u))
    }

    /// Damped Newton from `warm_start`. Never fails outright: non-convergence
    /// is reported through `converged` and `failure`.
    pub fn solve(&self, xi: f64, warm_start: &SineSeries) -> Result<SolutionPoint> {
        let mut coeffs = self.check_remainder(warm_start)?;
        let mut ev = self.evaluate(xi, &coeffs);
        let mut iters = 0;
        let mut condition = 0.0;
        let failure = loop {
            if !ev.norm.is_finite() {
                break Some(FailureKind::NonFinite);
            }
            if ev.norm < self.settings.newton_tol {
                break None;
            }
            if iters == self.settings.max_iter {
                break Some(FailureKind::MaxIterations);
            }
            let jac = self.jacobian_at(&ev.u);
            let lu = match Lu::factor(&jac) {
                Some(lu) => lu,
                None => {
                    break Some(FailureKind::SingularJacobian {
                        condition: f64::INFINITY,
                    })
                }
            };
            condition = lu.condition_estimate();
            if !(condition <= SINGULAR_CONDITION) {
                break Some(FailureKind::SingularJacobian { condition });
            }
            let rhs: Vec<f64> = self.free.iter().map(|&j| -ev.residual[j - 1]).collect();
            let step = lu.solve(&rhs);

            let mut damping = 1.0;
            let accepted = loop {
                let mut trial = coeffs.clone();
                for (&j, d) in self.free.iter().zip(&step) {
                    trial[j - 1] += damping * d;
                }
                let tev = self.evaluate(xi, &trial);
                if tev.norm.is_finite() && tev.norm < ev.norm {
                    coeffs = trial;
                    ev = tev;
                    break true;
                }
                damping *= 0.5;
                if damping < self.settings.min_damping {
                    break false;
                }
            };
            iters += 1;
            if !accepted {
                break Some(FailureKind::LineSearchStalled);
            }
        };
        coeffs[self.problem.k() - 1] = 0.0;
        Ok(SolutionPoint {
            xi,
            mu: ev.mu,
            remainder: SineSeries::new(self.basis.length, coeffs)?,
            residual_norm: ev.norm,
            newton_iters: iters,
            converged: failure.is_none(),
            failure,
            condition,
        })
    }

    /// Max relative discrepancy between `J v` and a centered difference of the
    /// residual along 5 seeded random directions `v`.
    pub fn jacobian_check(&self, xi: f64, remainder: &SineSeries, seed: u64) -> Result<f64> {
        let coeffs = self.check_remainder(remainder)?;
        let ev = self.evaluate(xi, &coeffs);
        let jac = self.jacobian_at(&ev.u);
        let norm_u = remainder.l2_norm();
        let h = 1e-6 * (1.0 + norm_u);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let v: Vec<f64> = self
                .free
                .iter()
                .map(|&j| rng.gen_range(-1.0..1.0) / j as f64)
                .collect();
            let jv = jac.mul_vec(&v);
            let mut plus = coeffs.clone();
            let mut minus = coeffs.clone();
            for (&j, d) in self.free.iter().zip(&v) {
                plus[j - 1] += h * d;
                minus[j - 1] -= h * d;
            }
            let rp = self.evaluate(xi, &plus).residual;
            let rm = self.evaluate(xi, &minus).residual;
            let mut diff = 0.0;
            let mut size = 0.0;
            for (a, &j) in self.free.iter().enumerate() {
                let fd = (rp[j - 1] - rm[j - 1]) / (2.0 * h);
                diff += (jv[a] - fd).powi(2);
                size += jv[a].powi(2);
            }
            worst = worst.max(diff.sqrt() / size.sqrt().max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    }
}

/// `(R, mu)` at `(xi, U)`, using `U`'s own mode count.
pub fn residual(p: &ProblemSpec, xi: f64, remainder: &SineSeries) -> Result<(SineSeries, f64)> {
    let settings = SolverSettings::default().with_modes(remainder.modes().max(p.k()).max(2));
    Solver::new(p, settings)?.residual(xi, remainder)
}

pub fn solve_at_signature(
    p: &ProblemSpec,
    xi: f64,
    warm_start: &SineSeries,
    settings: &SolverSettings,
) -> Result<SolutionPoint> {
    Solver::new(p, *settings)?.solve(xi, warm_start)
}

pub fn jacobian_check(p: &ProblemSpec, xi: f64, remainder: &SineSeries) -> Result<f64> {
    let settings = SolverSettings::default().with_modes(remainder.modes().max(p.k()).max(2));
    Solver::new(p, settings)?.jacobian_check(xi, remainder, 0x5eed)
}
