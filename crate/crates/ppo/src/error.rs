use thiserror::Error;

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("non-finite value in {0}")]
    NumericalHealth(&'static str),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Gcn(#[from] xslice_gcn::GcnError),
    #[error(transparent)]
    Core(#[from] xslice_core::CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
