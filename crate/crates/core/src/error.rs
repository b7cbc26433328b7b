use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("point ({x}, {y}) lies outside the observation window")]
    OutsideWindow { x: f64, y: f64 },

    /// theta1 <= 1 leaves the parabola without an attraction bump to paste onto.
    #[error("no-attraction degenerate interaction (theta1 = {0})")]
    NoAttraction(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown scenario id {0} (expected 1, 2 or 3)")]
    UnknownScenario(u32),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short identifier, used for machine-readable CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidWindow(_) => "invalid_window",
            Error::OutsideWindow { .. } => "outside_window",
            Error::NoAttraction(_) => "no_attraction",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Domain(_) => "domain",
            Error::InsufficientData(_) => "insufficient_data",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
