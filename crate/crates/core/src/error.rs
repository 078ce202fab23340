use thiserror::Error;

/// Errors raised by the physics modules.
///
/// The variants split into two families: input validation (a precondition was
/// violated) and numerical guards (the inputs were well-formed but a computation
/// could not be trusted). [`Error::is_numerical`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("speed {speed} m/s is not below the speed of light")]
    Superluminal { speed: f64 },

    #[error("scenario branch mismatch: expected {expected}, got {actual}")]
    BranchMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("invalid emission pattern: {0}")]
    InvalidPattern(String),

    #[error("angular density integrates to {integral}, expected 1")]
    Normalization { integral: f64 },

    #[error("pattern is not parity symmetric: rest-frame recoil {ratio:e} (in units of hbar*k0*Gamma) exceeds {tolerance:e}")]
    ParityViolation { ratio: f64, tolerance: f64 },

    #[error("Bradley aberration did not converge after {iterations} iterations (beta = {beta})")]
    NonConvergence { iterations: usize, beta: f64 },

    #[error("mass shift ratio {epsilon:e} is below 1e-15; frequency difference is not measurable at 64-bit precision")]
    Degenerate { epsilon: f64 },

    #[error("unknown ion '{name}'; available: {}", available.join(", "))]
    UnknownIon {
        name: String,
        available: Vec<String>,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for numerical-guard failures, false for input validation failures.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ParityViolation { .. }
                | Error::NonConvergence { .. }
                | Error::Degenerate { .. }
                | Error::Normalization { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
