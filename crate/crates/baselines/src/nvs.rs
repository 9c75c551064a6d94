use xslice_core::{Allocation, CoreError, KpmReport, SliceSpec, SlicingPolicy};

use crate::{achieved_per_slice, slice_demands};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NvsConfig {
    /// Averaging factor of the achieved-throughput filter.
    pub beta: f64,
    /// Lower bound on the average in the priority denominator, Mbps.
    pub floor_mbps: f64,
    /// PRBs each non-selected slice keeps.
    pub min_prb: u32,
    /// Give the selected slice the entire band and the others nothing.
    pub pure_time_multiplexing: bool,
}

impl Default for NvsConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            floor_mbps: 0.1,
            min_prb: 1,
            pure_time_multiplexing: false,
        }
    }
}

/// Per-slice requested and averaged throughput.
#[derive(Debug, Clone, PartialEq)]
pub struct NvsState {
    pub config: NvsConfig,
    pub requested_mbps: Vec<f64>,
    pub avg_mbps: Vec<f64>,
}

impl NvsState {
    pub fn new(slices: usize, config: NvsConfig) -> Self {
        Self {
            config,
            requested_mbps: vec![0.0; slices],
            avg_mbps: vec![0.0; slices],
        }
    }

    pub fn priorities(&self) -> Vec<f64> {
        self.requested_mbps
            .iter()
            .zip(&self.avg_mbps)
            .map(|(r, a)| r / a.max(self.config.floor_mbps))
            .collect()
    }

    /// Highest priority slice, lowest id on ties.
    pub fn select(&self) -> usize {
        let p = self.priorities();
        let mut best = 0;
        for k in 1..p.len() {
            if p[k] > p[best] {
                best = k;
            }
        }
        best
    }

    pub fn allocation(&self, selected: usize, n_rb: u32) -> Result<Allocation, CoreError> {
        let k = self.avg_mbps.len();
        if selected >= k {
            return Err(CoreError::Configuration(format!(
                "no slice {selected} among {k}"
            )));
        }
        let keep = if self.config.pure_time_multiplexing {
            0
        } else {
            self.config.min_prb
        };
        let reserved = u64::from(keep) * (k as u64 - 1);
        if reserved >= u64::from(n_rb) {
            return Err(CoreError::InfeasibleAllocation {
                n_rb,
                slices: k,
                min_prb: keep,
            });
        }
        let counts: Vec<u32> = (0..k)
            .map(|j| {
                if j == selected {
                    n_rb - reserved as u32
                } else {
                    keep
                }
            })
            .collect();
        Ok(Allocation::from_counts(&counts))
    }

    /// `avg_k <- (1 - beta) avg_k + beta achieved_k`.
    pub fn observe(&mut self, achieved_mbps: &[f64]) {
        let b = self.config.beta;
        for (avg, &x) in self.avg_mbps.iter_mut().zip(achieved_mbps) {
            *avg = (1.0 - b) * *avg + b * x;
        }
    }
}

/// Network Virtualization Substrate style slice multiplexing.
#[derive(Debug, Clone)]
pub struct Nvs {
    specs: Vec<SliceSpec>,
    n_rb: u32,
    state: NvsState,
    last_round: Option<u64>,
}

impl Nvs {
    pub fn new(specs: Vec<SliceSpec>, n_rb: u32, config: NvsConfig) -> Result<Self, CoreError> {
        let state = NvsState::new(specs.len(), config);
        state.allocation(0, n_rb)?;
        Ok(Self {
            specs,
            n_rb,
            state,
            last_round: None,
        })
    }

    pub fn state(&self) -> &NvsState {
        &self.state
    }
}

impl SlicingPolicy for Nvs {
    fn name(&self) -> &str {
        "nvs"
    }

    fn decide(&mut self, report: &KpmReport) -> Allocation {
        // A report is folded into the averages once, even if offered twice.
        if self.last_round.is_none_or(|r| report.round > r) {
            self.state
                .observe(&achieved_per_slice(self.specs.len(), report));
            self.last_round = Some(report.round);
        }
        self.state.requested_mbps = slice_demands(&self.specs, report);
        let k = self.state.select();
        self.state
            .allocation(k, self.n_rb)
            .expect("checked at construction")
    }
}
