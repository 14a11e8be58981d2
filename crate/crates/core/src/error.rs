use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Variants carry enough context to reproduce the failing call; the CLI
/// prints them verbatim prefixed with [`Error::module`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver did not converge for a {dim}x{dim} matrix after {iterations} iterations")]
    NonConvergence { dim: usize, iterations: usize },

    #[error("function is undefined at eigenvalue {eigenvalue}")]
    Domain { eigenvalue: f64 },

    #[error("eigenvalue {eigenvalue} lies within guard {guard} of interval boundary {boundary}")]
    GapViolation { eigenvalue: f64, boundary: f64, guard: f64 },

    #[error("paths do not join: endpoint gap {gap} exceeds tolerance {tolerance}")]
    Concatenation { gap: f64, tolerance: f64 },

    #[error(
        "subdivision exceeded depth {depth} on segment [{start}, {end}] \
         (best margin {margin} below guard {guard})"
    )]
    SubdivisionFailure {
        start: f64,
        end: f64,
        depth: usize,
        margin: f64,
        guard: f64,
    },

    #[error(
        "eigenvalue tracking is ambiguous between t={t0} and t={t1} with {samples} samples \
         (step {step} exceeds half-gap {half_gap}); increase the sample count"
    )]
    OracleResolution {
        t0: f64,
        t1: f64,
        samples: usize,
        step: f64,
        half_gap: f64,
    },

    #[error("precondition violated at parameter {parameter}: {reason}")]
    Precondition { parameter: f64, reason: String },

    #[error("winding number unresolved with {points} quadrature points: {reason}")]
    WindingResolution { points: usize, reason: String },

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("byte offset {offset}: {message}")]
    Ingestion { offset: usize, message: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Name of the engine module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Validation(_)
            | Error::DimensionMismatch { .. }
            | Error::NonConvergence { .. }
            | Error::Domain { .. }
            | Error::GapViolation { .. } => "operator-core",
            Error::Concatenation { .. } => "paths",
            Error::SubdivisionFailure { .. } | Error::OracleResolution { .. } | Error::Precondition { .. } => {
                "spectral-flow"
            }
            Error::WindingResolution { .. } => "winding",
            Error::Config { .. } | Error::Ingestion { .. } | Error::Io(_) => "cli",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
