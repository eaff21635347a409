//! Run artifacts: `curve.csv`, `asymptote.csv`, `analysis.txt`, `curve.svg`.
//!
//! Floats are written with `{}`, Rust's shortest representation that parses
//! back to the same `f64`, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::continuation::{analyze, count_solutions, shape_check, Curve, ExtremumKind};
use crate::error::Result;

pub const CURVE_HEADER: &str = "xi,mu,residual_norm,U_norm,newton_iters,converged";
pub const ASYMPTOTE_HEADER: &str = "xi,mu_asymptotic";

/// One row per node, gaps included with `converged = false`.
pub fn curve_csv(c: &Curve) -> String {
    let mut out = String::with_capacity(64 * (c.node_count() + 1));
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for p in c.nodes() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.xi,
            p.mu,
            p.residual_norm,
            p.remainder.l2_norm(),
            p.newton_iters,
            p.converged
        );
    }
    out
}

/// `None` when the problem has no asymptotic formula. `xi = 0` is skipped.
pub fn asymptote_csv(c: &Curve) -> Option<String> {
    let a = c.problem.asymptote()?;
    let mut out = String::from(ASYMPTOTE_HEADER);
    out.push('\n');
    for p in c.nodes() {
        if let Ok(mu) = a.mu(p.xi) {
            let _ = writeln!(out, "{},{}", p.xi, mu);
        }
    }
    Some(out)
}

pub fn analysis_text(c: &Curve, mu_star: &[f64]) -> String {
    let mut out = String::new();
    let p = &c.problem;
    let _ = writeln!(out, "problem: {}", p.name());
    let _ = writeln!(out, "g(u) = {}", p.nonlinearity().descriptor());
    let _ = writeln!(out, "L = {}, k = {}", p.length(), p.k());
    let _ = writeln!(
        out,
        "nodes: {} ({} converged, {} gaps), step {}, modes {}",
        c.node_count(),
        c.points.len(),
        c.gaps.len(),
        c.step,
        c.settings.modes
    );
    if !c.gaps.is_empty() {
        let _ = writeln!(out, "gaps: {}", c.diagnostics());
    }
    let a = match analyze(c) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(out, "analysis skipped: {e}");
            return out;
        }
    };
    if let Some(g) = a.global_min {
        let _ = writeln!(
            out,
            "global minimum: mu0 = {} at xi = {} ({})",
            g.mu,
            g.xi,
            if g.interior { "interior" } else { "endpoint" }
        );
    }
    let _ = writeln!(out, "extrema: {}", a.extrema.len());
    for e in &a.extrema {
        let kind = match e.kind {
            ExtremumKind::Min => "min",
            ExtremumKind::Max => "max",
        };
        let _ = writeln!(out, "  {kind} xi = {} mu = {}", e.xi, e.mu);
    }
    let _ = writeln!(out, "sign changes of mu: {}", a.sign_changes.len());
    for x in &a.sign_changes {
        let _ = writeln!(out, "  xi = {x}");
    }
    for &m in mu_star {
        let _ = writeln!(out, "solutions at mu* = {m}: {}", count_solutions(c, m));
    }
    if let Ok(s) = shape_check(c) {
        let _ = writeln!(
            out,
            "shape: ||U||/|xi| = {} at xi = {}, {} at xi = {}; decays: {}",
            s.r_far, s.xi_far, s.r_half, s.xi_half, s.decays
        );
    }
    if let Some(asym) = p.asymptote() {
        let _ = writeln!(out, "asymptote: {}", asym.describe());
    }
    out
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Tick spacing of 1, 2 or 5 times a power of ten giving about `target` ticks.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

/// Tick positions with their labels.
fn ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let step = tick_step(hi - lo, 8.0);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last)
        .map(|i| {
            let t = i as f64 * step;
            (t, format!("{t:.decimals$}"))
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], style: &str) {
    if pts.len() < 2 {
        return;
    }
    let _ = write!(out, "<polyline fill=\"none\" {style} points=\"");
    for (i, &(x, y)) in pts.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", frame.px(x), frame.py(y));
    }
    out.push_str("\"/>\n");
}

/// Line plot of `mu` against `xi`, broken at gaps, with the asymptotic curve
/// dashed when the problem has one. Self-contained, no external references.
pub fn curve_svg(c: &Curve) -> String {
    let nodes = c.nodes();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    if c.points.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\">no converged points</text>",
            LEFT,
            HEIGHT / 2.0
        );
        out.push_str("</svg>\n");
        return out;
    }

    let x0 = nodes.first().unwrap().xi;
    let mut x1 = nodes.last().unwrap().xi;
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    let (mut y0, mut y1) = c
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.mu), b.max(p.mu))
        });
    let pad = 0.05 * (y1 - y0).max(1e-12);
    y0 -= pad;
    y1 += pad;
    let frame = Frame { x0, x1, y0, y1 };
    let (pl, pr, pt, pb) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);

    let _ = writeln!(
        out,
        "<defs><clipPath id=\"plot\"><rect x=\"{pl}\" y=\"{pt}\" width=\"{}\" height=\"{}\"/></clipPath></defs>",
        pr - pl,
        pb - pt
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{}</text>",
        0.5 * (pl + pr),
        escape(c.problem.name())
    );

    // axes and ticks
    let _ = writeln!(
        out,
        "<rect x=\"{pl}\" y=\"{pt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        pr - pl,
        pb - pt
    );
    for (t, label) in ticks(x0, x1) {
        let x = frame.px(t);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{pb}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>",
            pb + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            pb + 18.0,
            label
        );
    }
    for (t, label) in ticks(y0, y1) {
        let y = frame.py(t);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{pl}\" y2=\"{y:.2}\" stroke=\"black\"/>",
            pl - 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            pl - 8.0,
            y + 4.0,
            label
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        let y = frame.py(0.0);
        let _ = writeln!(
            out,
            "<line x1=\"{pl}\" y1=\"{y:.2}\" x2=\"{pr}\" y2=\"{y:.2}\" stroke=\"#999\" stroke-width=\"0.5\"/>"
        );
    }
    let k = c.problem.k();
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">xi_{k}</text>",
        0.5 * (pl + pr),
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">mu_{k}</text>",
        0.5 * (pt + pb),
        0.5 * (pt + pb)
    );

    out.push_str("<g clip-path=\"url(#plot)\">\n");
    if let Some(a) = c.problem.asymptote() {
        // Split at xi = 0, where the formula is singular.
        let mut seg: Vec<(f64, f64)> = Vec::new();
        for p in &nodes {
            match a.mu(p.xi) {
                Ok(m) if seg.last().is_none_or(|l| l.0.signum() == p.xi.signum()) => {
                    seg.push((p.xi, m))
                }
                Ok(m) => {
                    polyline(
                        &mut out,
                        &frame,
                        &seg,
                        "stroke=\"#d62728\" stroke-width=\"1.2\" stroke-dasharray=\"6,4\"",
                    );
                    seg = vec![(p.xi, m)];
                }
                Err(_) => {
                    polyline(
                        &mut out,
                        &frame,
                        &seg,
                        "stroke=\"#d62728\" stroke-width=\"1.2\" stroke-dasharray=\"6,4\"",
                    );
                    seg.clear();
                }
            }
        }
        polyline(
            &mut out,
            &frame,
            &seg,
            "stroke=\"#d62728\" stroke-width=\"1.2\" stroke-dasharray=\"6,4\"",
        );
    }
    let mut seg: Vec<(f64, f64)> = Vec::new();
    for p in &nodes {
        if p.converged {
            seg.push((p.xi, p.mu));
        } else {
            polyline(
                &mut out,
                &frame,
                &seg,
                "stroke=\"#1f77b4\" stroke-width=\"1.5\"",
            );
            seg.clear();
        }
    }
    polyline(
        &mut out,
        &frame,
        &seg,
        "stroke=\"#1f77b4\" stroke-width=\"1.5\"",
    );
    out.push_str("</g>\n</svg>\n");
    out
}

/// Writes all artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, c: &Curve, mu_star: &[f64]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("curve.csv"), curve_csv(c))?;
    fs::write(dir.join("analysis.txt"), analysis_text(c, mu_star))?;
    if let Some(a) = asymptote_csv(c) {
        fs::write(dir.join("asymptote.csv"), a)?;
    }
    fs::write(dir.join("curve.svg"), curve_svg(c))?;
    Ok(())
}
