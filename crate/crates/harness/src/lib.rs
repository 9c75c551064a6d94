//! Experiment harness: presets, runs, metrics files, summaries and sweeps.

pub mod config;
pub mod error;
pub mod inject;
pub mod metrics;
pub mod presets;
pub mod run;
pub mod summary;
pub mod sweep;

pub use config::{ExperimentConfig, Overrides, PolicyKind, TransportKind};
pub use error::HarnessError;
pub use inject::{inject_event, parse_event};
pub use metrics::{MetricsRow, Scoring};
pub use presets::{load_scenario, preset, PRESETS};
pub use run::{run_experiment, RunOutput};
pub use summary::{summarize, Summary, Window};
pub use sweep::{run_sweep, SweepParam, SweepRow};
