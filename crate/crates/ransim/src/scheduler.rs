//! Intra-slice PRB assignment.
//!
//! PRBs of a grant are handed out one at a time. A PRB first goes to a
//! session whose backlog is not yet covered by the PRBs it already holds;
//! once every backlog is covered, remaining PRBs go to any backlogged session
//! (shortening its service time). PRBs idle only when no session in the
//! group has queued bytes.

use xslice_core::SchedulerKind;

use crate::queue::PacketQueue;

/// Exponential averaging factor of the proportional-fair served-rate filter.
pub const DEFAULT_PF_BETA: f64 = 0.1;

/// What the scheduler sees of one session.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    /// Bytes one PRB carries for this session this round.
    pub prb_bytes: u64,
    pub queue: &'a PacketQueue,
    /// Exponentially averaged delivered bits per round.
    pub pf_avg_bits: f64,
    /// Delay budget of the session's slice, ms.
    pub delay_budget_ms: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SchedParams {
    pub round_ms: f64,
    pub pf_beta: f64,
}

impl Default for SchedParams {
    fn default() -> Self {
        Self {
            round_ms: 100.0,
            pf_beta: DEFAULT_PF_BETA,
        }
    }
}

/// Distributes `n_prb` PRBs over `cands`; returns the PRB count per candidate.
///
/// `rr_cursor` carries the round-robin position across rounds.
pub fn assign_prbs(
    policy: SchedulerKind,
    cands: &[Candidate<'_>],
    n_prb: u32,
    rr_cursor: &mut usize,
    params: SchedParams,
) -> Vec<u32> {
    let n = cands.len();
    let mut prbs = vec![0u32; n];
    if n == 0 {
        return prbs;
    }
    for _ in 0..n_prb {
        let assigned_bytes = |i: usize| u64::from(prbs[i]) * cands[i].prb_bytes;
        let uncovered: Vec<usize> = (0..n)
            .filter(|&i| cands[i].prb_bytes > 0 && cands[i].queue.bytes() > assigned_bytes(i))
            .collect();
        let (eligible, covering) = if uncovered.is_empty() {
            let backlogged: Vec<usize> = (0..n)
                .filter(|&i| cands[i].prb_bytes > 0 && !cands[i].queue.is_empty())
                .collect();
            (backlogged, false)
        } else {
            (uncovered, true)
        };
        if eligible.is_empty() {
            break;
        }
        let pick = match policy {
            SchedulerKind::ProportionalFair => argmax(&eligible, |i| {
                let rate = cands[i].prb_bytes as f64 * 8.0;
                let served = assigned_bytes(i) as f64 * 8.0;
                let avg = (1.0 - params.pf_beta) * cands[i].pf_avg_bits + params.pf_beta * served;
                rate / avg.max(1.0)
            }),
            SchedulerKind::MaxThroughput => argmax(&eligible, |i| cands[i].prb_bytes as f64),
            SchedulerKind::EarliestDeadlineFirst => argmax(&eligible, |i| {
                let offset = if covering { assigned_bytes(i) } else { 0 };
                let arrival = cands[i].queue.arrival_at(offset).unwrap_or(u64::MAX / 2);
                -(arrival as f64 * params.round_ms + cands[i].delay_budget_ms)
            }),
            SchedulerKind::RoundRobin => {
                let start = *rr_cursor % n;
                let pick = (0..n)
                    .map(|k| (start + k) % n)
                    .find(|i| eligible.contains(i))
                    .expect("eligible set is nonempty");
                *rr_cursor = (pick + 1) % n;
                pick
            }
        };
        prbs[pick] += 1;
    }
    prbs
}

/// First index with the strictly largest score.
fn argmax(eligible: &[usize], score: impl Fn(usize) -> f64) -> usize {
    let mut best = eligible[0];
    let mut best_score = score(best);
    for &i in &eligible[1..] {
        let s = score(i);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Proportional-fair average update after a round.
pub fn pf_update(avg_bits: f64, delivered_bits: f64, beta: f64) -> f64 {
    (1.0 - beta) * avg_bits + beta * delivered_bits
}
