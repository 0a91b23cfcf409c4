use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("strategy space mismatch: {0}")]
    StrategySpaceMismatch(String),

    #[error("{0} policy is not tabular; exact computation requires tabular inputs")]
    NotTabular(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown model id: {0:?} not present in the price table")]
    UnknownModel(String),

    #[error("trial error for strategy validation after {attempts} attempts: {message}")]
    TrialError { attempts: u32, message: String },

    #[error("teacher failure: {0}")]
    TeacherFailure(String),

    #[error("judge unavailable: {0}")]
    JudgeUnavailable(String),

    #[error("transport failure [{correlation_id}] after {attempts} attempts: {message}")]
    Transport {
        correlation_id: String,
        attempts: u32,
        message: String,
    },

    #[error("protocol error [{correlation_id}]: {message}")]
    Protocol {
        correlation_id: String,
        message: String,
    },

    #[error("script miss: no scripted response for key {0:?}")]
    ScriptMiss(String),

    #[error("non-finite update at step {step}, state {state}")]
    NonFinite { step: usize, state: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
