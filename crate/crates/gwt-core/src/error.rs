use thiserror::Error;

/// Errors produced by grid construction, model registration and the solvers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid potential model: {0}")]
    InvalidModel(String),

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    #[error("packet invariant violated at t = {t}: {message}")]
    PacketInvariant { t: f64, message: String },

    #[error("solver failure at t = {t}: {message}")]
    SolverFailure { t: f64, message: String },

    #[error("time {t} outside trajectory range [0, {t_end}]")]
    TimeOutOfRange { t: f64, t_end: f64 },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("snapshot i/o: {0}")]
    SnapshotIo(#[from] std::io::Error),

    #[error("malformed snapshot: {0}")]
    SnapshotFormat(String),
}
