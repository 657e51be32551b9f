use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),

    #[error("unsupported dimension {0} (supported: 1, 2, 3)")]
    UnsupportedDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bounding box radius {needed} exceeds configured maximum {max}")]
    BoxOverflow { needed: i64, max: i64 },

    #[error("environment does not factorize as r(x)p(x,y): deviation {deviation:e} at law {law}")]
    NonFactorized { law: usize, deviation: f64 },

    #[error("layers have the wrong orientation: {0}")]
    WrongOrientation(String),

    #[error("target {target} is outside the computed radius {radius}")]
    RayEscaped { target: String, radius: i64 },

    #[error("empty point set")]
    EmptySet,

    #[error("particle count exceeded the bit budget of {budget} bits at time {time}")]
    CountOverflow { budget: u64, time: usize },

    #[error("induced-walk residual kernel is negative ({value:e}) at {site}; declared epsilon0 is too large")]
    NegativeResidual { site: String, value: f64 },

    #[error("direction {0} is not on the profile grid")]
    NotOnGrid(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
