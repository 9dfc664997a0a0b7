use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{name} = {value} is outside the admissible range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("no bracketing interval: {0}")]
    NoBracket(String),

    #[error("profile integration failed at x = {x}: phi = {phi} left the band above {threshold}")]
    Integration { x: f64, phi: f64, threshold: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last update {last_update:e}, tolerance {tolerance:e})")]
    FixedPoint {
        iterations: usize,
        last_update: f64,
        tolerance: f64,
    },

    #[error("quadrature did not reach tolerance: estimated error {estimate:e} after {intervals} intervals")]
    Quadrature { estimate: f64, intervals: usize },

    #[error("singular pivot at row {0} during factorization")]
    SingularPivot(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{context}: {message}")]
    Io { context: String, message: String },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::Domain { name, value, range }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Domain { .. } => "domain",
            Error::Argument(_) => "argument",
            Error::NoBracket(_) => "no_bracket",
            Error::Integration { .. } => "integration",
            Error::FixedPoint { .. } => "fixed_point",
            Error::Quadrature { .. } => "quadrature",
            Error::SingularPivot(_) => "singular_pivot",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
        }
    }

    /// True when the input was rejected before any computation went wrong.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::Argument(_) | Error::Dimension { .. })
    }
}
