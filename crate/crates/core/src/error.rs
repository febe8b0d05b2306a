use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no sign change of the shooting criterion on [{lo}, {hi}]")]
    NonBracketing { lo: f64, hi: f64 },

    #[error("numerical instability at t = {t}: value {value} left [-1e-6, 1 + 1e-6]")]
    Instability { t: f64, value: f64 },

    #[error("boundary collar out of sync: cauchy t = {cauchy_t}, periodic t = {periodic_t}")]
    CollarDesync { cauchy_t: f64, periodic_t: f64 },

    #[error("level set reached the domain edge at t = {t} before the fit window closed")]
    DomainTooSmall { t: f64 },

    #[error("threshold search: {0}")]
    Threshold(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
