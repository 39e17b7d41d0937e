use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the solver, diagnostics and bound evaluators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("field is not flagged as real-valued")]
    NotReal,
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("nonzero mean mode in {field}: {value:e}")]
    NonzeroMean { field: &'static str, value: f64 },
    #[error("non-finite value in state at t = {time}")]
    NonFinite { time: f64 },
    #[error("time step collapse at t = {time}: required dt = {dt:e} below dt_min")]
    DtCollapse { time: f64, dt: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("spectrum is not decaying (fitted slope {slope:e} >= 0)")]
    NotDecaying { slope: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("time {t} outside integrand range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("field is not resolved on the grid (tau * k_dealias = {product:.3} < 30)")]
    Unresolved { product: f64 },
    #[error("calibration failed: {0}")]
    CalibrationFailed(String),
    #[error("configuration file not found: {0}")]
    ConfigNotFound(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    /// Machine-parsable category used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_)
            | Error::ShapeMismatch { .. }
            | Error::NotReal
            | Error::GridMismatch
            | Error::InvalidArgument(_) => "invalid_argument",
            Error::NonzeroMean { .. } => "nonzero_mean",
            Error::NonFinite { .. } => "nan",
            Error::DtCollapse { .. } => "cfl_collapse",
            Error::NotDecaying { .. } => "not_decaying",
            Error::InsufficientData(_) => "insufficient_data",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Unresolved { .. } => "unresolved",
            Error::CalibrationFailed(_) => "calibration_failed",
            Error::ConfigNotFound(_) => "config_not_found",
            Error::ConfigInvalid(_) => "config_invalid",
            Error::Io(_) => "io_error",
            Error::Serialization(_) => "serialization_error",
        }
    }
}
