use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Intra-slice MAC scheduling discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    #[default]
    ProportionalFair,
    RoundRobin,
    MaxThroughput,
    EarliestDeadlineFirst,
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SchedulerKind::ProportionalFair => "proportional-fair",
            SchedulerKind::RoundRobin => "round-robin",
            SchedulerKind::MaxThroughput => "max-throughput",
            SchedulerKind::EarliestDeadlineFirst => "earliest-deadline-first",
        };
        f.write_str(s)
    }
}

/// Per-slice weights applied to the throughput, delay and reliability regrets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretWeights {
    pub throughput: f64,
    pub delay: f64,
    pub reliability: f64,
}

impl RegretWeights {
    pub const fn new(throughput: f64, delay: f64, reliability: f64) -> Self {
        Self {
            throughput,
            delay,
            reliability,
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self::new(self.throughput * c, self.delay * c, self.reliability * c)
    }
}

impl Default for RegretWeights {
    /// Base weight vector `[1, 0.8, 2]`.
    fn default() -> Self {
        Self::new(1.0, 0.8, 2.0)
    }
}

/// QoS demand triple of a slice together with its regret weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub id: usize,
    #[serde(default)]
    pub name: String,
    /// Throughput demand, Mbps.
    pub throughput_mbps: f64,
    /// Delay demand, ms.
    pub delay_ms: f64,
    /// Block error rate demand, fraction in (0, 1].
    pub bler: f64,
    #[serde(default)]
    pub weights: RegretWeights,
    #[serde(default)]
    pub scheduler: SchedulerKind,
}

impl SliceSpec {
    pub fn new(
        id: usize,
        throughput_mbps: f64,
        delay_ms: f64,
        bler: f64,
        weights: RegretWeights,
    ) -> Result<Self, CoreError> {
        let spec = Self {
            id,
            name: String::new(),
            throughput_mbps,
            delay_ms,
            bler,
            weights,
            scheduler: SchedulerKind::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_scheduler(mut self, scheduler: SchedulerKind) -> Self {
        self.scheduler = scheduler;
        self
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.throughput_mbps) {
            return Err(CoreError::DemandSpec(format!(
                "slice {}: throughput demand must be > 0, got {}",
                self.id, self.throughput_mbps
            )));
        }
        if !positive(self.delay_ms) {
            return Err(CoreError::DemandSpec(format!(
                "slice {}: delay demand must be > 0, got {}",
                self.id, self.delay_ms
            )));
        }
        if !(positive(self.bler) && self.bler <= 1.0) {
            return Err(CoreError::DemandSpec(format!(
                "slice {}: BLER demand must lie in (0, 1], got {}",
                self.id, self.bler
            )));
        }
        let w = self.weights;
        for (name, v) in [
            ("throughput", w.throughput),
            ("delay", w.delay),
            ("reliability", w.reliability),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CoreError::DemandSpec(format!(
                    "slice {}: {name} weight must be nonnegative, got {v}",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// One session's measurements for one round, as reported by the RAN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpmRecord {
    pub session_id: u32,
    pub slice_id: usize,
    /// Delivered throughput this round, Mbps.
    pub throughput_mbps: f64,
    /// Mean sojourn of delivered bytes (or head-of-line age), ms.
    pub delay_ms: f64,
    /// Failed blocks over attempted blocks.
    pub bler: f64,
    pub prbs_used: u32,
    pub pusch_snr_db: f64,
    pub phr_db: f64,
    pub mcs: u8,
    /// Transport block size of one PRB-slot at the current MCS, bytes.
    pub current_tbs: u32,
    pub scheduled_rbs: u32,
    /// Bytes still queued at the end of the round.
    pub queue_bytes: u64,
}

impl KpmRecord {
    /// A record for a session that has seen no traffic yet.
    pub fn idle(session_id: u32, slice_id: usize) -> Self {
        Self {
            session_id,
            slice_id,
            throughput_mbps: 0.0,
            delay_ms: 0.0,
            bler: 0.0,
            prbs_used: 0,
            pusch_snr_db: 0.0,
            phr_db: 0.0,
            mcs: 0,
            current_tbs: 0,
            scheduled_rbs: 0,
            queue_bytes: 0,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.throughput_mbps.is_finite()
            && self.throughput_mbps >= 0.0
            && self.delay_ms.is_finite()
            && self.delay_ms >= 0.0
            && (0.0..=1.0).contains(&self.bler)
            && self.pusch_snr_db.is_finite()
            && self.phr_db.is_finite()
            && self.mcs <= 28
    }
}

/// All session records of one round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KpmReport {
    pub round: u64,
    pub records: Vec<KpmRecord>,
}

/// Contiguous PRB range granted to one slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grant {
    pub start_prb: u32,
    pub num_prb: u32,
}

/// Bandwidth-part command: one contiguous grant per slice, in slice-id order.
///
/// A `pooled` allocation carries a single grant shared by every session of
/// every slice (slice boundaries dissolved for scheduling).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub grants: Vec<Grant>,
    #[serde(default)]
    pub pooled: bool,
}

impl Allocation {
    /// Lays `counts` out contiguously from PRB 0 in slice order.
    pub fn from_counts(counts: &[u32]) -> Self {
        let mut start = 0;
        let grants = counts
            .iter()
            .map(|&n| {
                let g = Grant {
                    start_prb: start,
                    num_prb: n,
                };
                start += n;
                g
            })
            .collect();
        Self {
            grants,
            pooled: false,
        }
    }

    /// The whole band as one logical slice.
    pub fn pooled(n_rb: u32) -> Self {
        Self {
            grants: vec![Grant {
                start_prb: 0,
                num_prb: n_rb,
            }],
            pooled: true,
        }
    }

    /// Equal split with the remainder handed to the lowest slice ids.
    pub fn equal_split(slices: usize, n_rb: u32) -> Self {
        let base = n_rb / slices as u32;
        let extra = n_rb as usize % slices;
        let counts: Vec<u32> = (0..slices).map(|k| base + u32::from(k < extra)).collect();
        Self::from_counts(&counts)
    }

    pub fn counts(&self) -> Vec<u32> {
        self.grants.iter().map(|g| g.num_prb).collect()
    }

    pub fn total(&self) -> u32 {
        self.grants.iter().map(|g| g.num_prb).sum()
    }

    /// Checks the band constraint and that grants are contiguous,
    /// non-overlapping and ascending.
    pub fn validate(&self, n_rb: u32) -> Result<(), CoreError> {
        if self.grants.is_empty() {
            return Err(CoreError::InvalidAllocation("no grants".into()));
        }
        if self.pooled && self.grants.len() != 1 {
            return Err(CoreError::InvalidAllocation(
                "pooled allocation must carry exactly one grant".into(),
            ));
        }
        let mut next = 0u64;
        for (k, g) in self.grants.iter().enumerate() {
            if u64::from(g.start_prb) < next {
                return Err(CoreError::InvalidAllocation(format!(
                    "grant {k} starts at {} which overlaps the previous grant",
                    g.start_prb
                )));
            }
            next = u64::from(g.start_prb) + u64::from(g.num_prb);
        }
        if next > u64::from(n_rb) {
            return Err(CoreError::InvalidAllocation(format!(
                "grants end at PRB {next}, beyond the {n_rb} available"
            )));
        }
        Ok(())
    }
}

/// Unweighted regret components of one slice for one round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceRegret {
    pub throughput: f64,
    pub delay: f64,
    pub reliability: f64,
}

impl SliceRegret {
    pub fn weighted(&self, w: &RegretWeights) -> f64 {
        w.throughput * self.throughput + w.delay * self.delay + w.reliability * self.reliability
    }
}

/// Everything the reward computation produces for one round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretBreakdown {
    pub per_slice: Vec<SliceRegret>,
    pub total: f64,
    pub utilization: f64,
    pub reward: f64,
    pub normalized_reward: f64,
}
