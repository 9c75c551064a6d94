//! Domain types shared by the RAN simulator, the E2-lite protocol, the
//! learning agent and the baselines, plus the regret / utilization / reward
//! arithmetic that every slicing policy is scored against.

pub mod allocation;
pub mod error;
pub mod policy;
pub mod regret;
pub mod types;

pub use allocation::{action_to_allocation, largest_remainder};
pub use error::CoreError;
pub use policy::SlicingPolicy;
pub use regret::{
    delay_regret_term, evaluate_round, evaluate_round_with, reliability_regret_term, reward,
    slice_regret, throughput_regret_term, total_regret, utilization, RewardBasis,
};
pub use types::{
    Allocation, Grant, KpmRecord, KpmReport, RegretBreakdown, RegretWeights, SchedulerKind,
    SliceRegret, SliceSpec,
};

/// Delay values are capped at one second, matching what a stalled session
/// reports in practice.
pub const DELAY_CAP_MS: f64 = 1000.0;
