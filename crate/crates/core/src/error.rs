use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes shared by every layer of the crate.
///
/// The command-line front end maps each class onto a fixed exit code, see
/// [`crate::cli::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Inputs are consistent individually but describe an inconsistent state,
    /// e.g. a positive overlap with an empty parallel component.
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error(
        "infeasible dependency: prescribed failure amplitude of state {index} violates the \
         linear relations among the inputs (residual {residual:.3e})"
    )]
    InfeasibleDependency { index: usize, residual: f64 },

    #[error("degenerate decomposition: {0}")]
    DegenerateDecomposition(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
