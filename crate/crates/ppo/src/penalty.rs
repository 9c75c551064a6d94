use xslice_core::{Allocation, KpmReport, DELAY_CAP_MS};

/// How starvation cases enter training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyMode {
    /// Rewards are never replaced.
    Off,
    /// Reward replaced by the penalty; the transition trains the critic but
    /// not the actor.
    #[default]
    ActorMask,
    /// Reward replaced and used by both actor and critic.
    Full,
    /// Penalized transitions are dropped from the buffer.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub mode: PenaltyMode,
    /// PRBs a backlogged session needs to stay connected.
    pub min_rb_per_session: u32,
    /// Normalized reward assigned to a penalized round.
    pub value: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            mode: PenaltyMode::ActorMask,
            min_rb_per_session: 5,
            value: -0.2,
        }
    }
}

/// True when a slice with backlog got fewer than `min_rb` PRBs per active
/// session, or some session's delay hit the cap.
pub fn penalty_triggered(report: &KpmReport, allocation: &Allocation, min_rb: u32) -> bool {
    if report.records.iter().any(|r| r.delay_ms >= DELAY_CAP_MS) {
        return true;
    }
    if allocation.pooled {
        return false;
    }
    let counts = allocation.counts();
    let mut sessions = vec![0u32; counts.len()];
    let mut backlog = vec![false; counts.len()];
    for r in &report.records {
        if r.slice_id < counts.len() {
            sessions[r.slice_id] += 1;
            backlog[r.slice_id] |= r.queue_bytes > 0;
        }
    }
    (0..counts.len()).any(|k| backlog[k] && counts[k] < min_rb * sessions[k])
}
