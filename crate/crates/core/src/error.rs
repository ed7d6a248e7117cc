use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates `1 < r < q < p`, `0 < s < 1`, `p·s < 1` or `λ ≥ 0`.
    InvalidParams(String),
    InvalidMesh(String),
    /// `p·s` is too close to 1 for the closed-form kernel integrals.
    DegenerateKernel { sigma: f64 },
    MeshMismatch { expected: usize, found: usize },
    NonFinite { context: &'static str },
    /// An operation that needs `λ > 0` was called with `λ = 0`.
    ZeroLambda,
    InvalidOrder { alpha: f64, s: f64 },
    NotConverged { context: &'static str, iterations: usize, residual: f64 },
    SaddleNotFound(String),
    PinViolation { node: usize, deficit: f64 },
    ResidualCheck { residual: f64, tol: f64 },
    Bracket(String),
    EmptyInput(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::InvalidMesh(msg) => write!(f, "invalid mesh: {msg}"),
            Error::DegenerateKernel { sigma } => {
                write!(f, "kernel exponent p*s = {sigma} is too close to 1")
            }
            Error::MeshMismatch { expected, found } => {
                write!(f, "grid function has {found} values, mesh has {expected} nodes")
            }
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::ZeroLambda => write!(f, "lambda must be positive"),
            Error::InvalidOrder { alpha, s } => {
                write!(f, "Hölder order alpha = {alpha} must lie in [0, s) with s = {s}")
            }
            Error::NotConverged { context, iterations, residual } => write!(
                f,
                "{context} did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::SaddleNotFound(msg) => write!(f, "saddle not found: {msg}"),
            Error::PinViolation { node, deficit } => {
                write!(f, "solution drops below the subsolution at node {node} by {deficit:e}")
            }
            Error::ResidualCheck { residual, tol } => {
                write!(f, "residual {residual:e} exceeds tolerance {tol:e}")
            }
            Error::Bracket(msg) => write!(f, "cannot establish a lambda bracket: {msg}"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
        }
    }
}

impl core::error::Error for Error {}
