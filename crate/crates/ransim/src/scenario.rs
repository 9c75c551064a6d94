//! Scenario description: slices, session templates, traffic and events.
//!
//! Scenarios are written as TOML. A minimal file:
//!
//! ```toml
//! seed = 7
//! rounds = 2000
//! n_rb = 273
//! traffic_class = "medium"
//!
//! [[slices]]
//! id = 0
//! throughput_mbps = 80.0
//! delay_ms = 100.0
//! bler = 0.2
//!
//! [[sessions]]
//! slice = 0
//! mean_snr_db = 24.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use xslice_core::SliceSpec;

use crate::error::RanError;
use crate::link::{LinkModel, SLOT_MS};
use crate::scheduler::DEFAULT_PF_BETA;
use crate::traffic::DemandProfile;

/// Per-session offered-rate ranges of the standard traffic cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficClass {
    Light,
    Medium,
    Intensive,
    #[default]
    Custom,
}

impl TrafficClass {
    /// Offered-rate range in Mbps; `None` for custom traffic.
    pub fn range_mbps(self) -> Option<(f64, f64)> {
        match self {
            TrafficClass::Light => Some((20.0, 80.0)),
            TrafficClass::Medium => Some((80.0, 160.0)),
            TrafficClass::Intensive => Some((160.0, 220.0)),
            TrafficClass::Custom => None,
        }
    }
}

/// How a session's offered rate is produced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DemandSpec {
    /// Uniform draws over the scenario's traffic-class range.
    #[default]
    Class,
    Uniform {
        min_mbps: f64,
        max_mbps: f64,
    },
    Constant {
        mbps: f64,
    },
    /// `[first_round, mbps]` change points.
    Steps {
        steps: Vec<(u64, f64)>,
    },
}

fn default_correlation() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTemplate {
    pub slice: usize,
    pub mean_snr_db: f64,
    #[serde(default = "default_correlation")]
    pub correlation: f64,
    #[serde(default)]
    pub arrival: u64,
    #[serde(default)]
    pub departure: Option<u64>,
    #[serde(default)]
    pub demand: DemandSpec,
}

impl SessionTemplate {
    pub fn new(slice: usize, mean_snr_db: f64, demand: DemandSpec) -> Self {
        Self {
            slice,
            mean_snr_db,
            correlation: default_correlation(),
            arrival: 0,
            departure: None,
            demand,
        }
    }
}

/// A change applied by the environment at a given round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioEvent {
    /// A new session; it receives the next free session id.
    SessionArrival {
        round: u64,
        session: SessionTemplate,
    },
    SessionDeparture {
        round: u64,
        session: u32,
    },
    DemandStep {
        round: u64,
        session: u32,
        mbps: f64,
    },
}

impl ScenarioEvent {
    pub fn round(&self) -> u64 {
        match self {
            ScenarioEvent::SessionArrival { round, .. }
            | ScenarioEvent::SessionDeparture { round, .. }
            | ScenarioEvent::DemandStep { round, .. } => *round,
        }
    }
}

fn default_round_ms() -> f64 {
    100.0
}
fn default_n_rb() -> u32 {
    106
}
fn default_hold() -> f64 {
    100.0
}
fn default_pf_beta() -> f64 {
    DEFAULT_PF_BETA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    pub rounds: u64,
    #[serde(default = "default_round_ms")]
    pub round_ms: f64,
    #[serde(default = "default_n_rb")]
    pub n_rb: u32,
    #[serde(default)]
    pub traffic_class: TrafficClass,
    /// Mean number of rounds between demand re-draws of random profiles.
    #[serde(default = "default_hold")]
    pub demand_hold_rounds: f64,
    #[serde(default = "default_pf_beta")]
    pub pf_beta: f64,
    /// Queued bytes at least this old are discarded at the start of a round,
    /// like a PDCP discard timer. Unlimited when absent.
    #[serde(default)]
    pub discard_ms: Option<f64>,
    #[serde(default)]
    pub link: LinkModel,
    pub slices: Vec<SliceSpec>,
    #[serde(default)]
    pub sessions: Vec<SessionTemplate>,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, RanError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RanError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn slice_count(&self) -> usize {
        self.slices.len()
    }

    /// Templates of every session the scenario will ever contain, in session-id
    /// order: the initial sessions followed by arrival events sorted by round.
    pub fn all_sessions(&self) -> Vec<SessionTemplate> {
        let mut out = self.sessions.clone();
        for ev in self.sorted_events() {
            if let ScenarioEvent::SessionArrival { round, session } = ev {
                let mut t = session.clone();
                t.arrival = *round;
                out.push(t);
            }
        }
        out
    }

    /// Events in application order (stable by round).
    pub fn sorted_events(&self) -> Vec<&ScenarioEvent> {
        let mut evs: Vec<&ScenarioEvent> = self.events.iter().collect();
        evs.sort_by_key(|e| e.round());
        evs
    }

    pub fn demand_profile(&self, template: &SessionTemplate) -> Result<DemandProfile, RanError> {
        Ok(match &template.demand {
            DemandSpec::Class => {
                let (lo, hi) = self.traffic_class.range_mbps().ok_or_else(|| {
                    RanError::Scenario(
                        "session uses the traffic class but the class is custom".into(),
                    )
                })?;
                DemandProfile::random(lo, hi, self.demand_hold_rounds)
            }
            DemandSpec::Uniform { min_mbps, max_mbps } => {
                DemandProfile::random(*min_mbps, *max_mbps, self.demand_hold_rounds)
            }
            DemandSpec::Constant { mbps } => DemandProfile::constant(*mbps),
            DemandSpec::Steps { steps } => DemandProfile::Steps(steps.clone()),
        })
    }

    pub fn validate(&self) -> Result<(), RanError> {
        let err = |msg: String| Err(RanError::Scenario(msg));
        if self.slices.is_empty() {
            return err("at least one slice is required".into());
        }
        for (k, s) in self.slices.iter().enumerate() {
            if s.id != k {
                return err(format!(
                    "slices[{k}] has id {}; ids must be 0..K in order",
                    s.id
                ));
            }
            s.validate()?;
        }
        if !(self.round_ms > 0.0 && (self.round_ms / SLOT_MS).fract() == 0.0) {
            return err(format!(
                "round_ms = {} must be a positive multiple of {SLOT_MS} ms",
                self.round_ms
            ));
        }
        if (self.n_rb as usize) < self.slices.len() {
            return err(format!(
                "n_rb = {} cannot give {} slices one PRB each",
                self.n_rb,
                self.slices.len()
            ));
        }
        if let Some(d) = self.discard_ms {
            if !(d >= self.round_ms) {
                return err(format!(
                    "discard_ms = {d} must be at least one round ({} ms)",
                    self.round_ms
                ));
            }
        }
        if !(self.pf_beta > 0.0 && self.pf_beta <= 1.0) {
            return err(format!("pf_beta = {} must lie in (0, 1]", self.pf_beta));
        }
        let all = self.all_sessions();
        for (i, t) in all.iter().enumerate() {
            if t.slice >= self.slices.len() {
                return err(format!("session {i} references unknown slice {}", t.slice));
            }
            if let Some(dep) = t.departure {
                if dep <= t.arrival {
                    return err(format!(
                        "session {i}: departure {dep} must come after arrival {}",
                        t.arrival
                    ));
                }
            }
            if !(0.0..1.0).contains(&t.correlation) {
                return err(format!(
                    "session {i}: correlation {} must lie in [0, 1)",
                    t.correlation
                ));
            }
            if !t.mean_snr_db.is_finite() {
                return err(format!("session {i}: mean SNR must be finite"));
            }
            match &t.demand {
                DemandSpec::Class if self.traffic_class == TrafficClass::Custom => {
                    return err(format!(
                        "session {i} draws from the traffic class but traffic_class is custom"
                    ));
                }
                DemandSpec::Uniform { min_mbps, max_mbps }
                    if !(*min_mbps >= 0.0 && max_mbps >= min_mbps) =>
                {
                    return err(format!("session {i}: invalid uniform range"));
                }
                DemandSpec::Constant { mbps } if !(*mbps >= 0.0) => {
                    return err(format!("session {i}: negative rate"));
                }
                DemandSpec::Steps { steps }
                    if steps.windows(2).any(|w| w[0].0 > w[1].0)
                        || steps.iter().any(|s| !(s.1 >= 0.0)) =>
                {
                    return err(format!(
                        "session {i}: steps must be ascending with nonnegative rates"
                    ));
                }
                _ => {}
            }
        }
        for ev in &self.events {
            match ev {
                ScenarioEvent::SessionDeparture { session, .. }
                | ScenarioEvent::DemandStep { session, .. } => {
                    if *session as usize >= all.len() {
                        return err(format!("event references unknown session {session}"));
                    }
                }
                ScenarioEvent::SessionArrival { .. } => {}
            }
            if let ScenarioEvent::DemandStep { mbps, .. } = ev {
                if !(*mbps >= 0.0) {
                    return err(format!("demand step to negative rate {mbps}"));
                }
            }
        }
        Ok(())
    }
}
