use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("schedule does not match configuration: {0}")]
    ScheduleMismatch(String),
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("total time is zero")]
    ZeroTotal,
    #[error(transparent)]
    Core(#[from] reapkit_core::Error),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
