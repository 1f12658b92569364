use thiserror::Error;

/// Errors raised by the numerical kernels and pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("bus index {index} out of range for {node_count} buses")]
    IndexOutOfRange { index: usize, node_count: usize },

    #[error("invalid branch {from}-{to}: {reason}")]
    InvalidBranch {
        from: usize,
        to: usize,
        reason: &'static str,
    },

    #[error("grid graph is disconnected ({reached} of {node_count} buses reachable from bus 0)")]
    Disconnected { reached: usize, node_count: usize },

    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:.3e})")]
    NonConvergence { iterations: usize, mismatch: f64 },

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("matrix is not complex symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("eigenvector {index} is quasi-null (|v^T v| = {norm:.3e})")]
    DegenerateBasis { index: usize, norm: f64 },

    #[error("bound domain error: {0}")]
    BoundDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no stealthy attack exists for the requested set: {0}")]
    NoNullSpace(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("stale activation cache: {0}")]
    StaleCache(&'static str),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Singular(_)
                | Error::DegenerateBasis { .. }
                | Error::NoNullSpace(_)
                | Error::NonFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
