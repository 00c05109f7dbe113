use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sphere dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("axis index {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("vector is not unit length: |v| = {norm}")]
    NotUnit { norm: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("degenerate renormalization for particle {particle}: |V~| = {norm:e}")]
    DegenerateStep { particle: usize, norm: f64 },

    #[error("solver aborted at iteration {iteration}: {source}")]
    SolverAbort {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("measurement vectors do not form a frame: {0}")]
    NotAFrame(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("power iteration did not converge within {max_iter} iterations (last step {last_step:e})")]
    NoConvergence { max_iter: usize, last_step: f64 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures of the numerical dynamics itself, as opposed to bad input or I/O.
    pub fn is_solver_abort(&self) -> bool {
        matches!(self, Error::SolverAbort { .. } | Error::DegenerateStep { .. } | Error::NoConvergence { .. })
    }
}
