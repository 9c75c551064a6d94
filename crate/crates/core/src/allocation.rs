//! Mapping continuous per-slice ratios onto integer PRB grants.

use crate::error::CoreError;
use crate::types::Allocation;

/// Splits `total` into integer parts: every part gets `floor` first, then the
/// remainder is shared proportionally to `weights` using the largest-remainder
/// method (ties go to the lower index). All-zero weights share equally.
///
/// The result always sums to exactly `total`.
pub fn largest_remainder(weights: &[f64], total: u32, floor: u32) -> Result<Vec<u32>, CoreError> {
    let k = weights.len();
    if k == 0 {
        return Err(CoreError::Configuration("no slices to allocate".into()));
    }
    let reserved = u64::from(floor) * k as u64;
    if reserved > u64::from(total) {
        return Err(CoreError::InfeasibleAllocation {
            n_rb: total,
            slices: k,
            min_prb: floor,
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(CoreError::Configuration(format!(
            "allocation weights must be finite and nonnegative: {weights:?}"
        )));
    }
    let remaining = total - reserved as u32;
    let sum: f64 = weights.iter().sum();
    let shares: Vec<f64> = if sum > 0.0 {
        weights
            .iter()
            .map(|w| f64::from(remaining) * w / sum)
            .collect()
    } else {
        vec![f64::from(remaining) / k as f64; k]
    };

    let mut parts: Vec<u32> = shares.iter().map(|s| s.floor() as u32).collect();
    let assigned: u32 = parts.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    // Stable sort keeps the lower index first among equal remainders.
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.total_cmp(&ra)
    });
    for &i in order
        .iter()
        .take(remaining.saturating_sub(assigned) as usize)
    {
        parts[i] += 1;
    }
    Ok(parts.into_iter().map(|p| p + floor).collect())
}

/// Turns per-slice RB ratios in `[0, 1]` into a feasible contiguous allocation.
///
/// Each slice asks for `max(min_prb, round(ratio * n_rb))` PRBs. If the asks
/// overflow the band they are rescaled proportionally (above the floor) with
/// largest-remainder rounding so the band is used exactly.
pub fn action_to_allocation(
    ratios: &[f64],
    n_rb: u32,
    min_prb: u32,
) -> Result<Allocation, CoreError> {
    let k = ratios.len();
    if k == 0 {
        return Err(CoreError::Configuration("no slices to allocate".into()));
    }
    if u64::from(min_prb) * k as u64 > u64::from(n_rb) {
        return Err(CoreError::InfeasibleAllocation {
            n_rb,
            slices: k,
            min_prb,
        });
    }
    if let Some(bad) = ratios.iter().find(|r| !r.is_finite()) {
        return Err(CoreError::Configuration(format!("non-finite ratio {bad}")));
    }
    let asks: Vec<u32> = ratios
        .iter()
        .map(|r| ((r.clamp(0.0, 1.0) * f64::from(n_rb)).round() as u32).max(min_prb))
        .collect();
    let sum: u64 = asks.iter().map(|&n| u64::from(n)).sum();
    if sum <= u64::from(n_rb) {
        return Ok(Allocation::from_counts(&asks));
    }
    let weights: Vec<f64> = asks.iter().map(|&n| f64::from(n - min_prb)).collect();
    let counts = largest_remainder(&weights, n_rb, min_prb)?;
    Ok(Allocation::from_counts(&counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Grant;

    #[test]
    fn exact_fit() {
        let a = action_to_allocation(&[0.5, 0.3, 0.2], 100, 1).unwrap();
        assert_eq!(a.counts(), vec![50, 30, 20]);
        let starts: Vec<u32> = a.grants.iter().map(|g| g.start_prb).collect();
        assert_eq!(starts, vec![0, 50, 80]);
    }

    #[test]
    fn overflow_rescales_to_band() {
        let a = action_to_allocation(&[1.0, 1.0], 100, 1).unwrap();
        assert_eq!(a.counts(), vec![50, 50]);
        assert_eq!(a.total(), 100);
    }

    #[test]
    fn floor_enforced() {
        let a = action_to_allocation(&[0.0, 0.0, 0.0], 100, 1).unwrap();
        assert_eq!(a.counts(), vec![1, 1, 1]);
        assert_eq!(
            a.grants,
            vec![
                Grant {
                    start_prb: 0,
                    num_prb: 1
                },
                Grant {
                    start_prb: 1,
                    num_prb: 1
                },
                Grant {
                    start_prb: 2,
                    num_prb: 1
                }
            ]
        );
    }

    #[test]
    fn infeasible_configuration() {
        assert!(matches!(
            action_to_allocation(&[0.5, 0.5, 0.5], 10, 4),
            Err(CoreError::InfeasibleAllocation { .. })
        ));
    }

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(
            largest_remainder(&[100.0, 100.0], 100, 1).unwrap(),
            vec![50, 50]
        );
        assert_eq!(
            largest_remainder(&[300.0, 100.0], 100, 1).unwrap(),
            vec![75, 25]
        );
        let even = largest_remainder(&[1.0, 1.0, 1.0], 100, 1).unwrap();
        assert_eq!(even, vec![34, 33, 33]);
        assert_eq!(largest_remainder(&[0.0, 0.0], 7, 0).unwrap(), vec![4, 3]);
    }
}
