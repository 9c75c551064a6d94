use thiserror::Error;

#[derive(Debug, Error)]
pub enum GcnError {
    #[error("{sessions} sessions exceed the graph capacity of {n_max}")]
    Capacity { sessions: usize, n_max: usize },
    #[error("session {session} belongs to slice {slice} but only {slices} slices exist")]
    UnknownSlice {
        session: u32,
        slice: usize,
        slices: usize,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
