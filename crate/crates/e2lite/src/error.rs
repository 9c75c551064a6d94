use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("malformed message at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("unsupported message type `{0}`")]
    Unsupported(String),
    #[error("line exceeds {0} bytes")]
    TooLong(usize),
}

#[derive(Debug, Error)]
pub enum E2Error {
    #[error("transport closed")]
    Closed,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("slice configuration digest {got} does not match {expected}")]
    DigestMismatch { expected: String, got: String },
    #[error("environment: {0}")]
    Ran(#[from] xslice_ransim::RanError),
}
