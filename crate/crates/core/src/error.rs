use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("strategy shares must sum to 1 (w_f + w_c + w_e = {sum})")]
    SharesDoNotSumToOne { sum: f64 },

    #[error("dy_bp = {dy_bp} is inconsistent with dz_ns / pi_elasticity = {implied}")]
    InconsistentTradeMultiplier { dy_bp: f64, implied: f64 },

    #[error("unknown parameter name `{0}`")]
    UnknownParameter(String),

    #[error("equilibria P2/P3 do not exist for these shares (w_f = {w_f}, w_c = {w_c})")]
    NoOuterEquilibria { w_f: f64, w_c: f64 },

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate series: zero variance")]
    Degenerate,

    #[error("series contains non-finite values")]
    NonFinite,

    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("ill-conditioned regression: {0}")]
    IllConditioned(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
            _ => Error::Malformed(e.to_string()),
        }
    }
}
