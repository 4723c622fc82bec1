use thiserror::Error;

/// Errors raised by the simulator.
///
/// The variants are grouped so that the CLI can map them onto its exit-code
/// taxonomy: configuration problems, physical degeneracies and numeric
/// contract violations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The two bands touch (|h| below the gap floor).
    #[error("degenerate spectrum: |h| = {norm:e} is below the gap floor {floor:e}")]
    Degeneracy { norm: f64, floor: f64 },

    /// The gap parameter sits on (or too close to) a topological transition.
    #[error("gap parameter m = {m} is within {margin} of the critical point {critical}")]
    CriticalPoint { m: f64, critical: f64, margin: f64 },

    /// A pre/post condition between two pipeline stages was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Too many ensemble members hit a degenerate fidelity reference.
    #[error("ensemble aborted: {failed} of {total} instances failed")]
    EnsembleAborted { failed: usize, total: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Degeneracy { .. } | Error::CriticalPoint { .. } | Error::EnsembleAborted { .. } => 3,
            Error::Contract(_) => 4,
            Error::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
