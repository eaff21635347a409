//! Problem config files.
//!
//! A config is a TOML document with a `[problem]` and an optional `[run]`
//! table:
//!
//! ```toml
//! [problem]
//! name = "my-problem"         # optional
//! L = 1.0                     # interval length, default 1
//! k = 1                       # driven harmonic, default 1
//! g = "pi^2*u + sin(u)"       # expression in u
//! e = [[2, 0.3], [5, -1.0]]   # (mode, coefficient) pairs, default none
//! asymptote = "higher-k"      # optional: "higher-k", or
//! asymptote_h = "5*(u^2+1)^(5/12)"  # principal form with this h
//!
//! [run]
//! xi_min = -3.0
//! xi_max = 3.0
//! xi_step = 0.1
//! modes = 64
//! newton_tol = 1e-10
//! max_iter = 50
//! quad_nodes = 256            # optional, default 4 * modes
//! mu_star = [0.0, 1.0]        # optional multiplicity queries
//! ```
//!
//! Instead of `g` and `e`, `[problem]` may name a built-in entry with
//! `catalog = "resonance-k7"`; the entry's own default run applies to any
//! `[run]` key left out.

use serde::Deserialize;

use super::{catalog, Nonlinearity, ProblemSpec};
use crate::asymptotics::AsymptoticCurve;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::solver::SolverSettings;
use crate::spectral::SineSeries;

/// Curve-following parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_step: f64,
    pub settings: SolverSettings,
    pub mu_star: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            xi_min: -10.0,
            xi_max: 10.0,
            xi_step: 0.1,
            settings: SolverSettings::default(),
            mu_star: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn range(xi_min: f64, xi_max: f64, xi_step: f64) -> Self {
        Self {
            xi_min,
            xi_max,
            xi_step,
            ..Default::default()
        }
    }

    /// The run each catalog entry ships with.
    pub fn for_catalog(name: &str) -> Self {
        match name.trim() {
            "oscillatory-p512" => Self::range(5.0, 60.0, 0.1),
            "resonance-k7" => Self {
                settings: SolverSettings::default().with_modes(128),
                ..Self::range(10.0, 60.0, 0.1)
            },
            "amann-hess-type" => Self::range(-40.0, 40.0, 0.1),
            "resonant-bounded" => Self::range(-30.0, 30.0, 0.1),
            n if n.starts_with("cubic") => Self::range(-3.0, 3.0, 0.05),
            _ => Self::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi_min.is_finite() && self.xi_max.is_finite() && self.xi_min < self.xi_max) {
            return Err(Error::Config(format!(
                "need xi_min < xi_max, got [{}, {}]",
                self.xi_min, self.xi_max
            )));
        }
        if !(self.xi_step > 0.0 && self.xi_step.is_finite()) {
            return Err(Error::Config(format!(
                "xi_step must be positive, got {}",
                self.xi_step
            )));
        }
        self.settings
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub problem: ProblemSpec,
    pub run: RunConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    catalog: Option<String>,
    name: Option<String>,
    #[serde(rename = "L")]
    length: Option<f64>,
    k: Option<usize>,
    g: Option<String>,
    e: Option<Vec<(usize, f64)>>,
    asymptote: Option<String>,
    asymptote_h: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    xi_min: Option<f64>,
    xi_max: Option<f64>,
    xi_step: Option<f64>,
    modes: Option<usize>,
    newton_tol: Option<f64>,
    max_iter: Option<usize>,
    quad_nodes: Option<usize>,
    mu_star: Option<Vec<f64>>,
}

impl Config {
    pub fn parse(src: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        let (problem, mut run) = build_problem(raw.problem)?;
        let r = raw.run;
        run.xi_min = r.xi_min.unwrap_or(run.xi_min);
        run.xi_max = r.xi_max.unwrap_or(run.xi_max);
        run.xi_step = r.xi_step.unwrap_or(run.xi_step);
        run.settings.modes = r.modes.unwrap_or(run.settings.modes);
        run.settings.newton_tol = r.newton_tol.unwrap_or(run.settings.newton_tol);
        run.settings.max_iter = r.max_iter.unwrap_or(run.settings.max_iter);
        run.settings.quad_nodes = r.quad_nodes.or(run.settings.quad_nodes);
        if let Some(m) = r.mu_star {
            run.mu_star = m;
        }
        let c = Self { problem, run };
        c.validate()?;
        Ok(c)
    }

    /// Re-check after the run parameters were changed in place.
    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        if self.problem.k() > self.run.settings.modes {
            return Err(Error::Config(format!(
                "driven harmonic k = {} exceeds modes = {}",
                self.problem.k(),
                self.run.settings.modes
            )));
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        Self::parse(&src)
    }

    /// A catalog entry with its default run.
    pub fn from_catalog(name: &str) -> Result<Self> {
        Ok(Self {
            problem: catalog(name)?,
            run: RunConfig::for_catalog(name),
        })
    }
}

fn build_problem(raw: RawProblem) -> Result<(ProblemSpec, RunConfig)> {
    if let Some(name) = raw.catalog {
        if raw.g.is_some() || raw.e.is_some() || raw.length.is_some() || raw.k.is_some() {
            return Err(Error::Config(
                "`catalog` cannot be combined with L, k, g or e".into(),
            ));
        }
        let mut p = catalog(&name).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(n) = raw.name {
            p = p.with_name(n);
        }
        return Ok((p, RunConfig::for_catalog(&name)));
    }

    let g_src = raw
        .g
        .ok_or_else(|| Error::Config("[problem] needs either `catalog` or `g`".into()))?;
    let length = raw.length.unwrap_or(1.0);
    let k = raw.k.unwrap_or(1);
    let nl = Nonlinearity::from_expr(&g_src).map_err(|e| Error::Config(format!("g: {e}")))?;

    let pairs = raw.e.unwrap_or_default();
    let modes = pairs.iter().map(|&(m, _)| m).max().unwrap_or(0).max(k);
    let mut coeffs = vec![0.0; modes];
    for &(m, c) in &pairs {
        if m == 0 {
            return Err(Error::Config("e: modes are numbered from 1".into()));
        }
        coeffs[m - 1] += c;
    }
    if coeffs[k - 1] != 0.0 {
        return Err(Error::Config(format!(
            "e has coefficient {} on the driven mode {k}; the forcing must be orthogonal \
             to sin({k} pi x / L), so that harmonic belongs to mu alone",
            coeffs[k - 1]
        )));
    }
    let e = SineSeries::new(length, coeffs).map_err(|e| Error::Config(e.to_string()))?;
    let mut p = ProblemSpec::new(length, k, e, nl).map_err(|e| Error::Config(e.to_string()))?;
    p = p.with_name(raw.name.unwrap_or_else(|| "custom".into()));

    match (raw.asymptote.as_deref(), raw.asymptote_h) {
        (None, None) => {}
        (Some("higher-k"), None) => p = p.with_asymptote(AsymptoticCurve::higher_k(k, length)),
        (None | Some("principal"), Some(h_src)) => {
            let h = Expr::parse(&h_src).map_err(|e| Error::Config(format!("asymptote_h: {e}")))?;
            let desc = h_src.trim().to_string();
            p = p.with_asymptote(AsymptoticCurve::principal(desc, move |u| h.eval(u)));
        }
        (Some(other), _) => {
            return Err(Error::Config(format!(
                "asymptote must be \"higher-k\" or \"principal\" (with asymptote_h), got {other:?}"
            )))
        }
    }
    Ok((p, RunConfig::default()))
}
