use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("invalid demand specification: {0}")]
    DemandSpec(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("degenerate allocation: slice {slice} has zero PRBs with C = 0")]
    DegenerateAllocation { slice: usize },

    #[error("infeasible allocation: {n_rb} PRBs cannot give {slices} slices {min_prb} PRBs each")]
    InfeasibleAllocation {
        n_rb: u32,
        slices: usize,
        min_prb: u32,
    },

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
}
