use thiserror::Error;
use xslice_core::CoreError;

#[derive(Debug, Error)]
pub enum RanError {
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
