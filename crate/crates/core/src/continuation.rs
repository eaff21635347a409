//! Curve following in `xi` and analysis of the resulting `mu(xi)`.
//!
//! Marching uses fixed steps with warm starts. Since `xi` parametrizes the
//! whole solution set when `g'` stays between neighbouring eigenvalues, the
//! curve has no folds in `xi` and no arclength machinery is needed. A node
//! that fails is retried through 2, 4, ..., 64 substeps from the last
//! converged node before it is recorded as a gap.
//!
//! Only the branch reachable by warm-started marching is followed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::config::RunConfig;
use crate::problems::ProblemSpec;
use crate::solver::{SolutionPoint, Solver, SolverSettings};
use crate::spectral::SineSeries;

/// Halvings tried before a node becomes a gap.
pub const MAX_RETRIES: u32 = 6;

#[derive(Debug, Clone)]
pub struct Curve {
    pub problem: ProblemSpec,
    /// Converged points, `xi` strictly increasing.
    pub points: Vec<SolutionPoint>,
    /// Nodes where Newton failed even after retries, with the last iterate.
    pub gaps: Vec<SolutionPoint>,
    pub step: f64,
    pub settings: SolverSettings,
}

impl Curve {
    pub fn node_count(&self) -> usize {
        self.points.len() + self.gaps.len()
    }

    /// Every node, converged or not, in `xi` order.
    pub fn nodes(&self) -> Vec<&SolutionPoint> {
        let mut all: Vec<&SolutionPoint> = self.points.iter().chain(&self.gaps).collect();
        all.sort_by(|a, b| a.xi.total_cmp(&b.xi));
        all
    }

    pub fn gap_fraction(&self) -> f64 {
        match self.node_count() {
            0 => 0.0,
            n => self.gaps.len() as f64 / n as f64,
        }
    }

    /// `mu` at the converged node nearest `xi`.
    pub fn mu_near(&self, xi: f64) -> Option<f64> {
        self.points
            .iter()
            .min_by(|a, b| (a.xi - xi).abs().total_cmp(&(b.xi - xi).abs()))
            .map(|p| p.mu)
    }

    pub fn xis(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.xi).collect()
    }

    pub fn mus(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mu).collect()
    }

    /// One-line summary of failures, empty when there are none.
    pub fn diagnostics(&self) -> String {
        if self.gaps.is_empty() {
            return String::new();
        }
        let mut kinds: Vec<String> = Vec::new();
        for g in &self.gaps {
            let s = g.failure.map(|f| f.to_string()).unwrap_or_default();
            if !kinds.contains(&s) {
                kinds.push(s);
            }
        }
        format!(
            "{} of {} nodes failed ({}); first at xi = {}",
            self.gaps.len(),
            self.node_count(),
            kinds.join("; "),
            self.gaps[0].xi
        )
    }
}

/// `xi_min + i step` up to `xi_max`; `xi_max` itself is appended when the
/// step does not land on it.
pub fn grid_nodes(xi_min: f64, xi_max: f64, step: f64) -> Vec<f64> {
    let span = (xi_max - xi_min) / step;
    let n = (span + 1e-9).floor() as usize;
    let mut nodes: Vec<f64> = (0..=n).map(|i| xi_min + i as f64 * step).collect();
    let last = *nodes.last().unwrap();
    if xi_max - last > 1e-9 * step {
        nodes.push(xi_max);
    } else if let Some(l) = nodes.last_mut() {
        *l = xi_max;
    }
    nodes
}

pub fn follow_curve(
    p: &ProblemSpec,
    xi_min: f64,
    xi_max: f64,
    step: f64,
    settings: &SolverSettings,
) -> Result<Curve> {
    if !(xi_min < xi_max) || !xi_min.is_finite() || !xi_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need xi_min < xi_max, got [{xi_min}, {xi_max}]"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    let solver = Solver::new(p, *settings)?;
    let zero = SineSeries::zeros(p.length(), settings.modes);
    let mut points: Vec<SolutionPoint> = Vec::new();
    let mut gaps = Vec::new();

    for xi in grid_nodes(xi_min, xi_max, step) {
        let (from_xi, warm) = match points.last() {
            Some(last) => (last.xi, &last.remainder),
            None => (xi, &zero),
        };
        let mut pt = solver.solve(xi, warm)?;
        if !pt.converged && points.last().is_some() {
            for r in 1..=MAX_RETRIES {
                if let Some(ok) = substep(&solver, from_xi, xi, warm, 1 << r)? {
                    pt = ok;
                    break;
                }
            }
        }
        if pt.converged {
            points.push(pt);
        } else {
            gaps.push(pt);
        }
    }
    Ok(Curve {
        problem: p.clone(),
        points,
        gaps,
        step,
        settings: *settings,
    })
}

/// March from `(from, warm)` to `to` in `parts` equal substeps.
fn substep(
    solver: &Solver<'_>,
    from: f64,
    to: f64,
    warm: &SineSeries,
    parts: u32,
) -> Result<Option<SolutionPoint>> {
    let mut u = warm.clone();
    let mut last = None;
    for j in 1..=parts {
        let xi = if j == parts {
            to
        } else {
            from + (to - from) * j as f64 / parts as f64
        };
        let pt = solver.solve(xi, &u)?;
        if !pt.converged {
            return Ok(None);
        }
        u = pt.remainder.clone();
        last = Some(pt);
    }
    Ok(last)
}

/// Follows the run described by `run`.
pub fn follow_run(p: &ProblemSpec, run: &RunConfig) -> Result<Curve> {
    follow_curve(p, run.xi_min, run.xi_max, run.xi_step, &run.settings)
}

/// Independent runs in parallel; results keep the input order.
pub fn run_batch(jobs: &[(ProblemSpec, RunConfig)]) -> Vec<Result<Curve>> {
    jobs.par_iter().map(|(p, run)| follow_run(p, run)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub xi: f64,
    pub mu: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalMin {
    pub xi: f64,
    pub mu: f64,
    /// False when the smallest sample is an endpoint of the range.
    pub interior: bool,
}

#[derive(Debug, Clone, Default)]
pub struct CurveAnalysis {
    pub extrema: Vec<Extremum>,
    pub global_min: Option<GlobalMin>,
    pub sign_changes: Vec<f64>,
}

/// Vertex of the parabola through three points, if it lies between the
/// outer two; otherwise the middle point.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if a == 0.0 || !a.is_finite() {
        return (x[1], y[1]);
    }
    // y = y1 + b (t - x1) + a (t - x1)^2 with b the slope at x1
    let b = d1 + a * (x[1] - x[0]);
    let t = x[1] - b / (2.0 * a);
    if t < x[0] || t > x[2] {
        return (x[1], y[1]);
    }
    (t, y[1] - b * b / (4.0 * a))
}

/// Positions where `values` changes sign, linearly interpolated. A run of
/// exact zeros counts once, at its first node.
pub fn crossings(xs: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut in_zero_run = false;
    for (&x, &v) in xs.iter().zip(values) {
        if v == 0.0 {
            if !in_zero_run {
                out.push(x);
                in_zero_run = true;
            }
            prev = None;
            continue;
        }
        if in_zero_run {
            in_zero_run = false;
        } else if let Some((px, pv)) = prev {
            if pv.signum() != v.signum() {
                out.push(px + (x - px) * pv / (pv - v));
            }
        }
        prev = Some((x, v));
    }
    out
}

pub fn analyze(c: &Curve) -> Result<CurveAnalysis> {
    let xs = c.xis();
    let ys = c.mus();
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "analysis needs at least 3 converged points, curve has {}",
            xs.len()
        )));
    }
    let n = xs.len();

    // Slope signs between consecutive samples; zero slopes inherit the
    // previous sign so plateaus do not register twice.
    let mut extrema = Vec::new();
    let mut last_sign = 0.0;
    for i in 1..n - 1 {
        let s_prev = (ys[i] - ys[i - 1]).signum() * ((ys[i] != ys[i - 1]) as i32 as f64);
        if s_prev != 0.0 {
            last_sign = s_prev;
        }
        let s_next = ys[i + 1] - ys[i];
        if s_next == 0.0 || last_sign == 0.0 || s_next.signum() == last_sign {
            continue;
        }
        let (x, y) = parabola_vertex([xs[i - 1], xs[i], xs[i + 1]], [ys[i - 1], ys[i], ys[i + 1]]);
        let kind = if last_sign < 0.0 {
            ExtremumKind::Min
        } else {
            ExtremumKind::Max
        };
        extrema.push(Extremum { xi: x, mu: y, kind });
    }

    let imin = (0..n).min_by(|&a, &b| ys[a].total_cmp(&ys[b])).unwrap();
    let global_min = if imin == 0 || imin == n - 1 {
        GlobalMin {
            xi: xs[imin],
            mu: ys[imin],
            interior: false,
        }
    } else {
        let (x, y) = parabola_vertex(
            [xs[imin - 1], xs[imin], xs[imin + 1]],
            [ys[imin - 1], ys[imin], ys[imin + 1]],
        );
        GlobalMin {
            xi: x,
            mu: y.min(ys[imin]),
            interior: true,
        }
    };

    Ok(CurveAnalysis {
        extrema,
        global_min: Some(global_min),
        sign_changes: crossings(&xs, &ys),
    })
}

/// Crossings of `mu = mu_star` on the sampled window.
pub fn count_solutions(c: &Curve, mu_star: f64) -> usize {
    let xs = c.xis();
    let shifted: Vec<f64> = c.points.iter().map(|p| p.mu - mu_star).collect();
    crossings(&xs, &shifted).len()
}

/// Decay of the remainder relative to `xi`, compared at the far end of the
/// range and at half that `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport {
    pub xi_far: f64,
    pub xi_half: f64,
    /// `||U|| / |xi|`.
    pub r_far: f64,
    pub r_half: f64,
    /// `||U''|| / |xi|`.
    pub h2_far: f64,
    pub h2_half: f64,
    pub decays: bool,
    pub h2_decays: bool,
}

pub fn shape_check(c: &Curve) -> Result<ShapeReport> {
    let far = c
        .points
        .iter()
        .max_by(|a, b| a.xi.abs().total_cmp(&b.xi.abs()))
        .ok_or_else(|| Error::InvalidArgument("curve has no converged points".into()))?;
    if far.xi == 0.0 {
        return Err(Error::InvalidArgument("curve does not leave xi = 0".into()));
    }
    let target = 0.5 * far.xi;
    let half = c
        .points
        .iter()
        .filter(|p| p.xi != 0.0)
        .min_by(|a, b| (a.xi - target).abs().total_cmp(&(b.xi - target).abs()))
        .unwrap();
    let r = |p: &SolutionPoint| p.remainder.l2_norm() / p.xi.abs();
    let h2 = |p: &SolutionPoint| p.remainder.h2_seminorm() / p.xi.abs();
    let decreasing = |a: f64, b: f64| a < b || (a == 0.0 && b == 0.0);
    let (r_far, r_half, h2_far, h2_half) = (r(far), r(half), h2(far), h2(half));
    Ok(ShapeReport {
        xi_far: far.xi,
        xi_half: half.xi,
        r_far,
        r_half,
        h2_far,
        h2_half,
        decays: decreasing(r_far, r_half),
        h2_decays: decreasing(h2_far, h2_half),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{catalog, Nonlinearity};
    use std::f64::consts::PI;

    fn linear() -> ProblemSpec {
        ProblemSpec::new(1.0, 1, SineSeries::zeros(1.0, 2), Nonlinearity::zero()).unwrap()
    }

    #[test]
    fn grid_nodes_do_not_accumulate() {
        let g = grid_nodes(5.0, 60.0, 0.1);
        assert_eq!(g.len(), 551);
        assert_eq!(g[0], 5.0);
        assert_eq!(*g.last().unwrap(), 60.0);
        assert_eq!(g[250], 5.0 + 250.0 * 0.1);
        let g = grid_nodes(0.0, 1.0, 0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn linear_curve_is_exact() {
        let c = follow_curve(&linear(), -2.0, 2.0, 0.5, &SolverSettings::default()).unwrap();
        assert_eq!(c.points.len(), 9);
        assert!(c.gaps.is_empty());
        for p in &c.points {
            assert!((p.mu + PI * PI * p.xi).abs() < 1e-12);
        }
        let a = analyze(&c).unwrap();
        assert!(a.extrema.is_empty());
        assert_eq!(a.sign_changes.len(), 1);
        assert!(a.sign_changes[0].abs() < 1e-12);
        assert_eq!(count_solutions(&c, 0.0), 1);
        let gm = a.global_min.unwrap();
        assert!(!gm.interior);
        assert_eq!(gm.xi, 2.0);
    }

    #[test]
    fn linear_shape_is_zero() {
        let c = follow_curve(&linear(), -25.0, 25.0, 5.0, &SolverSettings::default()).unwrap();
        let s = shape_check(&c).unwrap();
        assert_eq!(s.r_far, 0.0);
        assert_eq!(s.r_half, 0.0);
        assert!(s.decays && s.h2_decays);
    }

    #[test]
    fn rejects_bad_ranges() {
        let s = SolverSettings::default();
        assert!(follow_curve(&linear(), 1.0, 1.0, 0.1, &s).is_err());
        assert!(follow_curve(&linear(), 0.0, 1.0, 0.0, &s).is_err());
    }

    #[test]
    fn crossing_rules() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(
            crossings(&xs, &[1.0, -1.0, -1.0, 1.0, 1.0, 1.0]),
            vec![0.5, 2.5]
        );
        // tangency at a node counts once
        assert_eq!(crossings(&xs, &[1.0, 0.0, 1.0, 1.0, 1.0, 1.0]), vec![1.0]);
        assert_eq!(
            crossings(&xs, &[1.0, 0.0, 0.0, -1.0, -1.0, -1.0]),
            vec![1.0]
        );
        assert!(crossings(&xs, &[1.0; 6]).is_empty());
    }

    #[test]
    fn parabola_refinement() {
        let f = |x: f64| (x - 0.3).powi(2) - 2.0;
        let (x, y) = parabola_vertex([0.0, 0.5, 1.0], [f(0.0), f(0.5), f(1.0)]);
        assert!((x - 0.3).abs() < 1e-14);
        assert!((y + 2.0).abs() < 1e-14);
    }

    #[test]
    fn analysis_of_synthetic_curve() {
        let p = linear();
        let points = (0..=200)
            .map(|i| {
                let xi = -10.0 + 0.1 * i as f64;
                SolutionPoint {
                    xi,
                    mu: xi.sin(),
                    remainder: SineSeries::zeros(1.0, 2),
                    residual_norm: 0.0,
                    newton_iters: 0,
                    converged: true,
                    failure: None,
                    condition: 0.0,
                }
            })
            .collect();
        let c = Curve {
            problem: p,
            points,
            gaps: vec![],
            step: 0.1,
            settings: SolverSettings::default(),
        };
        let a = analyze(&c).unwrap();
        // extrema of sin on [-10, 10] at pi/2 + n pi
        let want: Vec<f64> = (-3..=2).map(|n| PI / 2.0 + n as f64 * PI).collect();
        assert_eq!(a.extrema.len(), want.len());
        for (e, w) in a.extrema.iter().zip(&want) {
            assert!((e.xi - w).abs() < 1e-3, "{} vs {w}", e.xi);
            assert!((e.mu.abs() - 1.0).abs() < 1e-4);
        }
        assert_eq!(a.sign_changes.len(), 7);
        // sin = 0.5 at pi/6 + 2n pi and 5pi/6 + 2n pi
        assert_eq!(count_solutions(&c, 0.5), 7);
        assert_eq!(count_solutions(&c, 2.0), 0);
        let gm = a.global_min.unwrap();
        assert!(gm.interior);
        assert!((gm.mu + 1.0).abs() < 1e-4);
    }

    #[test]
    fn amann_hess_bounded_below() {
        let p = catalog("amann-hess-type").unwrap();
        let c = follow_curve(&p, -40.0, 40.0, 0.5, &SolverSettings::default()).unwrap();
        assert!(c.gaps.is_empty(), "{}", c.diagnostics());
        let a = analyze(&c).unwrap();
        let gm = a.global_min.unwrap();
        assert!(gm.interior);
        assert!(c.mus().iter().all(|&m| m > -50.0));
        assert!(c.points[0].mu > gm.mu && c.points.last().unwrap().mu > gm.mu);
    }

    #[test]
    fn warm_start_consistency() {
        let p = catalog("cubic").unwrap();
        let s = SolverSettings::default();
        let coarse = follow_curve(&p, -3.0, 3.0, 0.2, &s).unwrap();
        let fine = follow_curve(&p, -3.0, 3.0, 0.1, &s).unwrap();
        for (i, c) in coarse.points.iter().enumerate() {
            let f = &fine.points[2 * i];
            assert!((c.xi - f.xi).abs() < 1e-12);
            assert!((c.mu - f.mu).abs() < 1e-8, "{}: {} vs {}", c.xi, c.mu, f.mu);
        }
    }

    #[test]
    fn batch_matches_sequential() {
        let jobs = vec![
            (catalog("cubic").unwrap(), RunConfig::range(-1.0, 1.0, 0.25)),
            (linear(), RunConfig::range(0.0, 2.0, 0.5)),
        ];
        let out = run_batch(&jobs);
        for ((p, run), c) in jobs.iter().zip(out) {
            let c = c.unwrap();
            let s = follow_run(p, run).unwrap();
            assert_eq!(c.mus(), s.mus());
        }
    }
}
