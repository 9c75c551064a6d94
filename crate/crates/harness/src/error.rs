use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("configuration file: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error("scenario: {0}")]
    Scenario(#[from] xslice_ransim::RanError),
    #[error("event `{spec}`: {reason}")]
    Event { spec: String, reason: String },
    #[error("agent: {0}")]
    Agent(#[from] xslice_ppo::PpoError),
    #[error("policy: {0}")]
    Core(#[from] xslice_core::CoreError),
    #[error("transport failed after {rounds} rounds: {source}")]
    Transport {
        rounds: u64,
        #[source]
        source: xslice_e2lite::E2Error,
    },
    #[error("window {start}:{end} lies outside the available rounds {first}..={last} in {file}")]
    Window {
        start: u64,
        end: u64,
        first: u64,
        last: u64,
        file: String,
    },
    #[error("{file}: {reason}")]
    Metrics { file: String, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
