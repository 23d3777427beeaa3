use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid y_max = {y_max} is below 4*R0 = {limit}")]
    IncompatibleCutoff { y_max: f64, limit: f64 },

    #[error("positivity violated: min(h + H phi') = {min} at (x = {x}, y = {y}), required {required}")]
    Positivity {
        min: f64,
        x: f64,
        y: f64,
        required: f64,
    },

    #[error("derivative order {requested} exceeds supported budget {max}")]
    IndexBudget { requested: usize, max: usize },

    #[error("corrector order {0} unsupported (only 0 and 1)")]
    UnsupportedCorrectorOrder(usize),

    #[error("time derivative requested but no history level was supplied")]
    MissingHistory,

    #[error("non-finite value detected at t = {t}")]
    NonFinite { t: f64 },

    #[error("time step collapsed to {dt}")]
    CflCollapse { dt: f64 },

    #[error("stream function not increasing in column {column} (h1 <= 0 detected)")]
    Monotonicity { column: usize },

    #[error("decay check failed: |f g| at y_max = {value}")]
    Decay { value: f64 },

    #[error("majorant bracket non-positive at t = 0")]
    MajorantBracket,

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
