//! Offered-load profiles.

use rand::Rng;
use rand_distr::{Distribution, Exp, Uniform};
use serde::{Deserialize, Serialize};

/// Offered rate of one session over rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DemandProfile {
    /// Piecewise-constant rate: `(first_round, mbps)` change points in
    /// ascending order. The rate before the first point is zero.
    Steps(Vec<(u64, f64)>),
    /// Uniform draws over `[min, max]` Mbps, re-drawn at change points spaced
    /// by exponential holding times (Poisson change process).
    Random {
        min_mbps: f64,
        max_mbps: f64,
        mean_hold_rounds: f64,
        state: Option<RandomState>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomState {
    pub current_mbps: f64,
    pub next_change: u64,
}

impl DemandProfile {
    pub fn constant(mbps: f64) -> Self {
        DemandProfile::Steps(vec![(0, mbps)])
    }

    pub fn random(min_mbps: f64, max_mbps: f64, mean_hold_rounds: f64) -> Self {
        DemandProfile::Random {
            min_mbps,
            max_mbps,
            mean_hold_rounds,
            state: None,
        }
    }

    /// Offered rate at `round`. Random profiles must be queried with
    /// nondecreasing rounds; they draw from `rng` only at change points.
    pub fn rate_at<R: Rng + ?Sized>(&mut self, round: u64, rng: &mut R) -> f64 {
        match self {
            DemandProfile::Steps(steps) => steps
                .iter()
                .take_while(|(start, _)| *start <= round)
                .last()
                .map_or(0.0, |(_, r)| *r),
            DemandProfile::Random {
                min_mbps,
                max_mbps,
                mean_hold_rounds,
                state,
            } => {
                let uniform = Uniform::new_inclusive(*min_mbps, *max_mbps);
                let hold = Exp::new(1.0 / mean_hold_rounds.max(1e-9)).expect("positive rate");
                let draw_hold = |rng: &mut R| (hold.sample(rng).ceil() as u64).max(1);
                let st = state.get_or_insert_with(|| RandomState {
                    current_mbps: uniform.sample(rng),
                    next_change: round + draw_hold(rng),
                });
                while round >= st.next_change {
                    st.current_mbps = uniform.sample(rng);
                    st.next_change += draw_hold(rng);
                }
                st.current_mbps
            }
        }
    }
}

/// Bytes offered over one round at `mbps`: `mbps * round_ms * 125`.
pub fn bytes_per_round(mbps: f64, round_ms: f64) -> f64 {
    mbps * round_ms * 125.0
}
