//! Per-round metrics and their CSV form.

use std::io::Write;
use std::path::Path;

use xslice_core::{evaluate_round_with, Allocation, CoreError, KpmReport, RewardBasis, SliceSpec};
use xslice_ppo::penalty_triggered;

use crate::error::HarnessError;

/// Leading columns, followed by [`SLICE_COLUMNS`] for each slice as
/// `s<k>_<name>`.
pub const COLUMNS: [&str; 12] = [
    "policy",
    "round",
    "sessions",
    "throughput_mbps",
    "total_throughput_mbps",
    "latency_ms",
    "bler",
    "regret",
    "utilization",
    "reward",
    "normalized_reward",
    "penalty",
];

pub const SLICE_COLUMNS: [&str; 5] = ["throughput_mbps", "latency_ms", "bler", "regret", "prbs"];

#[derive(Debug, Clone, PartialEq)]
pub struct SliceMetrics {
    /// Sum over the slice's sessions.
    pub throughput_mbps: f64,
    /// Mean over the slice's sessions; 0 without sessions.
    pub latency_ms: f64,
    pub bler: f64,
    /// Weighted regret of the slice.
    pub regret: f64,
    /// PRBs granted (the whole band for a pooled allocation).
    pub prbs: u32,
    pub sessions: usize,
}

/// One round as seen by the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub policy: String,
    pub round: u64,
    pub sessions: usize,
    /// Mean per session.
    pub throughput_mbps: f64,
    pub total_throughput_mbps: f64,
    pub latency_ms: f64,
    pub bler: f64,
    pub regret: f64,
    pub utilization: f64,
    pub reward: f64,
    pub normalized_reward: f64,
    pub penalty: bool,
    pub slices: Vec<SliceMetrics>,
}

/// Scoring constants shared by every policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scoring {
    pub utilization_c: f64,
    pub r_max: f64,
    pub reward_basis: RewardBasis,
    pub min_rb_per_session: u32,
}

impl MetricsRow {
    pub fn from_round(
        policy: &str,
        round: u64,
        specs: &[SliceSpec],
        report: &KpmReport,
        allocation: &Allocation,
        scoring: Scoring,
    ) -> Result<Self, CoreError> {
        let eval = evaluate_round_with(
            specs,
            report,
            allocation,
            scoring.utilization_c,
            scoring.r_max,
            scoring.reward_basis,
        )?;
        let k = specs.len();
        let counts = allocation.counts();
        let mut slices: Vec<SliceMetrics> = (0..k)
            .map(|i| SliceMetrics {
                throughput_mbps: 0.0,
                latency_ms: 0.0,
                bler: 0.0,
                regret: eval.per_slice[i].weighted(&specs[i].weights),
                prbs: if allocation.pooled {
                    counts[0]
                } else {
                    counts[i]
                },
                sessions: 0,
            })
            .collect();
        for r in &report.records {
            let s = &mut slices[r.slice_id];
            s.throughput_mbps += r.throughput_mbps;
            s.latency_ms += r.delay_ms;
            s.bler += r.bler;
            s.sessions += 1;
        }
        for s in &mut slices {
            if s.sessions > 0 {
                s.latency_ms /= s.sessions as f64;
                s.bler /= s.sessions as f64;
            }
        }
        let n = report.records.len();
        let mean = |f: fn(&xslice_core::KpmRecord) -> f64| {
            if n == 0 {
                0.0
            } else {
                report.records.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let total: f64 = report.records.iter().map(|r| r.throughput_mbps).sum();
        Ok(Self {
            policy: policy.to_string(),
            round,
            sessions: n,
            throughput_mbps: mean(|r| r.throughput_mbps),
            total_throughput_mbps: total,
            latency_ms: mean(|r| r.delay_ms),
            bler: mean(|r| r.bler),
            regret: eval.total,
            utilization: eval.utilization,
            reward: eval.reward,
            normalized_reward: eval.normalized_reward,
            penalty: penalty_triggered(report, allocation, scoring.min_rb_per_session),
            slices,
        })
    }

    fn record(&self) -> Vec<String> {
        let mut out = vec![
            self.policy.clone(),
            self.round.to_string(),
            self.sessions.to_string(),
            self.throughput_mbps.to_string(),
            self.total_throughput_mbps.to_string(),
            self.latency_ms.to_string(),
            self.bler.to_string(),
            self.regret.to_string(),
            self.utilization.to_string(),
            self.reward.to_string(),
            self.normalized_reward.to_string(),
            u8::from(self.penalty).to_string(),
        ];
        for s in &self.slices {
            out.push(s.throughput_mbps.to_string());
            out.push(s.latency_ms.to_string());
            out.push(s.bler.to_string());
            out.push(s.regret.to_string());
            out.push(s.prbs.to_string());
        }
        out
    }
}

pub fn header(slices: usize) -> Vec<String> {
    let mut h: Vec<String> = COLUMNS.iter().map(|c| c.to_string()).collect();
    for k in 0..slices {
        h.extend(SLICE_COLUMNS.iter().map(|c| format!("s{k}_{c}")));
    }
    h
}

pub fn write_metrics<W: Write>(
    w: W,
    slices: usize,
    rows: &[MetricsRow],
) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(slices))?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_metrics_file(
    path: &Path,
    slices: usize,
    rows: &[MetricsRow],
) -> Result<(), HarnessError> {
    write_metrics(std::fs::File::create(path)?, slices, rows)
}

/// Wall-clock decision times, kept apart from the deterministic metrics.
pub fn write_timing_file(
    path: &Path,
    first_round: u64,
    micros: &[f64],
) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["round", "decision_time_us"])?;
    for (i, us) in micros.iter().enumerate() {
        out.write_record([(first_round + i as u64).to_string(), format!("{us:.3}")])?;
    }
    out.flush()?;
    Ok(())
}

/// `q`-quantile by the nearest-rank method.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (q * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}
