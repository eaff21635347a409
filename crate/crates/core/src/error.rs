use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode {mode} out of range for a series of {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("resonance: shift {shift} coincides with eigenvalue of mode {mode}")]
    Resonance { mode: usize, shift: f64 },

    #[error(
        "forcing must be orthogonal to the driven mode: coefficient of mode {mode} is {value}, expected 0"
    )]
    NotOrthogonal { mode: usize, value: f64 },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate critical point: |g''(x0)| = {curvature:e}")]
    DegenerateCriticalPoint { curvature: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
