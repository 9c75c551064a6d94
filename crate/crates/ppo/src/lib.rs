//! Actor-critic slicing agent trained with proximal policy optimization.
//!
//! The policy maps the graph-encoded KPM state to a Gaussian over per-slice
//! PRB ratios: `mu = logistic(actor(s))`, `sigma = softplus(theta_sigma)`.
//! Advantages come from generalized advantage estimation and updates use the
//! clipped surrogate objective with a squared-error value term. Rounds in
//! which a backlogged slice is starved are scored with a fixed penalty.

mod adam;
mod agent;
mod buffer;
mod checkpoint;
mod error;
mod gae;
mod loss;
mod mlp;
mod penalty;
mod policy;
mod snapshot;
mod train;

pub use adam::Adam;
pub use agent::{AgentConfig, StepRecord, TrainingMode, XSliceAgent};
pub use buffer::{RolloutBuffer, Transition};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, PPO_MAGIC, PPO_VERSION,
};
pub use error::PpoError;
pub use gae::{gae, normalize};
pub use loss::{ppo_loss, LossOutput, Sample};
pub use mlp::{Dense, Mlp, MlpCache};
pub use penalty::{penalty_triggered, PenaltyConfig, PenaltyMode};
pub use policy::{
    gaussian_log_prob, logistic, sample_action, softplus, softplus_inverse, Action, PolicyCache,
    PolicyConfig, PolicyOutput, PolicyParams,
};
pub use snapshot::{Snapshot, SnapshotCell};
pub use train::{synthetic_graph, Learner, PpoConfig, UpdateStats};
