//! Discrete-round RAN environment.
//!
//! Every round the simulator evolves each session's channel, enqueues the
//! session's offered traffic, lets each slice's MAC scheduler hand out the
//! PRBs of that slice's grant, transmits over the granted PRBs with random
//! block errors, and reports one [`KpmRecord`](xslice_core::KpmRecord) per
//! active session.

pub mod bandit;
pub mod env;
pub mod environment;
pub mod error;
pub mod kpm;
pub mod link;
pub mod queue;
pub mod scenario;
pub mod scheduler;
pub mod traffic;

pub use bandit::{BanditConfig, BanditEnv};
pub use env::{RanEnv, RoundService, SessionCounters, SessionState};
pub use environment::Environment;
pub use error::RanError;
pub use link::{
    cqi_to_efficiency, prb_capacity_bits, snr_to_cqi, step_channel, ChannelState, LinkModel,
};
pub use queue::PacketQueue;
pub use scenario::{DemandSpec, Scenario, ScenarioEvent, SessionTemplate, TrafficClass};
pub use traffic::DemandProfile;
