//! Regret, utilization and reward arithmetic.
//!
//! A session's regret has three parts, each a normalized deficit against the
//! slice demand that is zero once the demand is met: throughput
//! `max((P - rho) / P, 0)`, delay `max((tau - T) / T, 0)` and reliability
//! `max((zeta - Z) / Z, 0)`. Per-slice regrets sum these over the slice's
//! sessions; the round regret is the weighted sum over slices. The reward
//! is `u - r` where `u = sum_k 1 / (n_k + C)` rewards frugal PRB use.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::types::{Allocation, KpmRecord, KpmReport, RegretBreakdown, SliceRegret, SliceSpec};

fn deficit(demand: f64, excess: f64) -> f64 {
    (excess / demand).max(0.0)
}

/// `max((P - rho) / P, 0)`.
pub fn throughput_regret_term(demand_mbps: f64, achieved_mbps: f64) -> Result<f64, CoreError> {
    if !(demand_mbps.is_finite() && demand_mbps > 0.0) {
        return Err(CoreError::DemandSpec(format!(
            "throughput demand must be > 0, got {demand_mbps}"
        )));
    }
    Ok(deficit(demand_mbps, demand_mbps - achieved_mbps))
}

/// `max((tau - T) / T, 0)`.
pub fn delay_regret_term(demand_ms: f64, delay_ms: f64) -> Result<f64, CoreError> {
    if !(demand_ms.is_finite() && demand_ms > 0.0) {
        return Err(CoreError::DemandSpec(format!(
            "delay demand must be > 0, got {demand_ms}"
        )));
    }
    Ok(deficit(demand_ms, delay_ms - demand_ms))
}

/// `max((zeta - Z) / Z, 0)`.
pub fn reliability_regret_term(demand: f64, bler: f64) -> Result<f64, CoreError> {
    if !(demand.is_finite() && demand > 0.0) {
        return Err(CoreError::DemandSpec(format!(
            "BLER demand must be > 0, got {demand}"
        )));
    }
    Ok(deficit(demand, bler - demand))
}

/// Sums the three regret terms over the sessions of one slice.
///
/// The caller is responsible for passing only records of `spec`'s slice.
pub fn slice_regret<'a, I>(spec: &SliceSpec, records: I) -> SliceRegret
where
    I: IntoIterator<Item = &'a KpmRecord>,
{
    let mut out = SliceRegret::default();
    for rec in records {
        out.throughput += deficit(
            spec.throughput_mbps,
            spec.throughput_mbps - rec.throughput_mbps,
        );
        out.delay += deficit(spec.delay_ms, rec.delay_ms - spec.delay_ms);
        out.reliability += deficit(spec.bler, rec.bler - spec.bler);
    }
    out
}

/// Weighted sum of per-slice regrets.
pub fn total_regret(specs: &[SliceSpec], per_slice: &[SliceRegret]) -> Result<f64, CoreError> {
    if specs.len() != per_slice.len() {
        return Err(CoreError::Configuration(format!(
            "{} slice specs but {} regret triples",
            specs.len(),
            per_slice.len()
        )));
    }
    Ok(specs
        .iter()
        .zip(per_slice)
        .map(|(s, r)| r.weighted(&s.weights))
        .sum())
}

/// `u = sum_k 1 / (n_k + C)`.
pub fn utilization(counts: &[u32], c: f64) -> Result<f64, CoreError> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(CoreError::Configuration(format!(
            "utilization constant must be nonnegative, got {c}"
        )));
    }
    counts
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let denom = f64::from(n) + c;
            if denom <= 0.0 {
                Err(CoreError::DegenerateAllocation { slice: k })
            } else {
                Ok(1.0 / denom)
            }
        })
        .sum()
}

/// Returns `(u - r, clamp(u - r, -R_max, R_max) / R_max)`.
pub fn reward(regret: f64, utilization: f64, r_max: f64) -> (f64, f64) {
    debug_assert!(r_max > 0.0);
    let raw = utilization - regret;
    (raw, raw.clamp(-r_max, r_max) / r_max)
}

/// Which regret enters the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardBasis {
    /// The round regret summed over all sessions.
    #[default]
    Total,
    /// The round regret divided by the number of reporting sessions, which
    /// keeps the reward scale independent of the session count.
    SessionMean,
}

/// Scores one round: per-slice regrets from the report, utilization from
/// the applied allocation, and the raw and normalized reward.
pub fn evaluate_round(
    specs: &[SliceSpec],
    report: &KpmReport,
    allocation: &Allocation,
    c: f64,
    r_max: f64,
) -> Result<RegretBreakdown, CoreError> {
    evaluate_round_with(specs, report, allocation, c, r_max, RewardBasis::Total)
}

/// [`evaluate_round`] with a choice of the regret fed to the reward. The
/// breakdown's `total` is always the summed regret.
pub fn evaluate_round_with(
    specs: &[SliceSpec],
    report: &KpmReport,
    allocation: &Allocation,
    c: f64,
    r_max: f64,
    basis: RewardBasis,
) -> Result<RegretBreakdown, CoreError> {
    let mut per_slice = vec![SliceRegret::default(); specs.len()];
    for rec in &report.records {
        let spec = specs.get(rec.slice_id).ok_or_else(|| {
            CoreError::Configuration(format!(
                "session {} references unknown slice {}",
                rec.session_id, rec.slice_id
            ))
        })?;
        let r = slice_regret(spec, std::iter::once(rec));
        let acc = &mut per_slice[rec.slice_id];
        acc.throughput += r.throughput;
        acc.delay += r.delay;
        acc.reliability += r.reliability;
    }
    let total = total_regret(specs, &per_slice)?;
    let utilization = utilization(&allocation.counts(), c)?;
    let scored = match basis {
        RewardBasis::Total => total,
        RewardBasis::SessionMean => total / report.records.len().max(1) as f64,
    };
    let (reward, normalized_reward) = reward(scored, utilization, r_max);
    Ok(RegretBreakdown {
        per_slice,
        total,
        utilization,
        reward,
        normalized_reward,
    })
}
