use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fit did not converge: {0}")]
    Convergence(String),

    #[error("no crossing in range: {0}")]
    NoCrossing(String),

    #[error("bisection did not terminate after {iterations} iterations (p = {p}, zeta = {zeta})")]
    NonTermination { iterations: usize, p: f64, zeta: f64 },

    #[error("inconsistent tableau: {0}")]
    Inconsistent(String),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
