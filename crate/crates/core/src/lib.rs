//! Solution curves of one-dimensional semilinear Dirichlet problems
//!
//! ```text
//! u'' + g(u) = mu sin(k pi x / L) + e(x),   u(0) = u(L) = 0,
//! ```
//!
//! traced in the `k`-th harmonic `xi` of the solution. For every `xi` the
//! driven coefficient `mu` and the remainder `U` (orthogonal to the driven
//! mode) are found by Newton's method on the projected equation; marching `xi`
//! over a range gives the curve `mu(xi)`, whose turning points and level-set
//! crossings count solutions.
//!
//! Modules:
//!
//! * [`spectral`]: sine series, grids and modal solves.
//! * [`problems`]: nonlinearities, problem definitions, the built-in catalog
//!   and the config file format.
//! * [`solver`]: Newton solve at a fixed `xi`.
//! * [`continuation`]: curve following and curve analysis.
//! * [`asymptotics`]: stationary phase and large-`xi` formulas.
//! * [`oracle`]: shooting and adaptive quadrature reference solutions.
//! * [`output`]: CSV, text and SVG artifacts.
//! * [`verify`]: self-check suites.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod continuation;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod oracle;
pub mod output;
pub mod problems;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use problems::{catalog, Nonlinearity, ProblemSpec};
pub use solver::{SolutionPoint, Solver, SolverSettings};
pub use spectral::SineSeries;
