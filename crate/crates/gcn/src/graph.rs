use ndarray::Array2;
use xslice_core::{KpmRecord, KpmReport, SliceSpec, DELAY_CAP_MS};

use crate::error::GcnError;

/// Feature count per session node: throughput, delay, BLER, PRBs used,
/// PUSCH SNR, power headroom, MCS, TBS, scheduled RBs and the slice's
/// throughput, delay and BLER demands.
pub const FEATURES: usize = 12;

/// Fixed affine bounds mapping each raw feature onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBounds {
    pub lo: [f64; FEATURES],
    pub hi: [f64; FEATURES],
}

impl FeatureBounds {
    /// Bounds for a band of `n_rb` PRBs where one session can reach at most
    /// `max_session_mbps` and a slot carries at most `max_tbs` bytes per PRB.
    pub fn for_band(n_rb: u32, max_session_mbps: f64, max_tbs: f64, max_demand_mbps: f64) -> Self {
        let n = f64::from(n_rb);
        Self {
            lo: [
                0.0, 0.0, 0.0, 0.0, -10.0, -30.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            ],
            hi: [
                max_session_mbps,
                DELAY_CAP_MS,
                1.0,
                n,
                40.0,
                30.0,
                28.0,
                max_tbs,
                n,
                max_demand_mbps,
                DELAY_CAP_MS,
                1.0,
            ],
        }
    }

    pub fn raw(rec: &KpmRecord, spec: &SliceSpec) -> [f64; FEATURES] {
        [
            rec.throughput_mbps,
            rec.delay_ms,
            rec.bler,
            f64::from(rec.prbs_used),
            rec.pusch_snr_db,
            rec.phr_db,
            f64::from(rec.mcs),
            f64::from(rec.current_tbs),
            f64::from(rec.scheduled_rbs),
            spec.throughput_mbps,
            spec.delay_ms,
            spec.bler,
        ]
    }

    pub fn normalize(&self, raw: &[f64; FEATURES]) -> [f64; FEATURES] {
        let mut out = [0.0; FEATURES];
        for j in 0..FEATURES {
            let span = self.hi[j] - self.lo[j];
            out[j] = if span > 0.0 {
                ((raw[j] - self.lo[j]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
        out
    }
}

impl Default for FeatureBounds {
    fn default() -> Self {
        Self::for_band(106, 500.0, 512.0, 250.0)
    }
}

/// Bipartite session/slice graph. Nodes `0..n_max` are session slots,
/// nodes `n_max..n_max + k` are slice nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGraph {
    pub n_max: usize,
    pub slices: usize,
    pub adjacency: Array2<f64>,
    pub features: Array2<f64>,
    /// Slice of each session slot; `None` for dummy slots.
    pub session_slice: Vec<Option<usize>>,
    pub session_ids: Vec<Option<u32>>,
}

impl SliceGraph {
    pub fn node_count(&self) -> usize {
        self.n_max + self.slices
    }

    pub fn slice_node(&self, k: usize) -> usize {
        self.n_max + k
    }

    /// Real sessions per slice.
    pub fn occupancy(&self) -> Vec<usize> {
        let mut out = vec![0; self.slices];
        for k in self.session_slice.iter().flatten() {
            out[*k] += 1;
        }
        out
    }

    /// Graph from explicit per-slot slices and already normalized features.
    pub fn from_parts(
        n_max: usize,
        slices: usize,
        session_slice: Vec<Option<usize>>,
        features: Array2<f64>,
    ) -> Self {
        assert_eq!(session_slice.len(), n_max);
        let n = n_max + slices;
        assert_eq!(features.nrows(), n);
        let mut adjacency = Array2::zeros((n, n));
        for (i, k) in session_slice.iter().enumerate() {
            if let Some(k) = *k {
                assert!(k < slices);
                adjacency[[i, n_max + k]] = 1.0;
                adjacency[[n_max + k, i]] = 1.0;
            }
        }
        Self {
            n_max,
            slices,
            adjacency,
            features,
            session_ids: vec![None; n_max],
            session_slice,
        }
    }
}

/// Encodes `report` as a graph with `n_max` session slots.
pub fn build_graph(
    report: &KpmReport,
    specs: &[SliceSpec],
    n_max: usize,
    bounds: &FeatureBounds,
) -> Result<SliceGraph, GcnError> {
    if report.records.len() > n_max {
        return Err(GcnError::Capacity {
            sessions: report.records.len(),
            n_max,
        });
    }
    let k = specs.len();
    let mut features = Array2::zeros((n_max + k, FEATURES));
    let mut session_slice = vec![None; n_max];
    let mut session_ids = vec![None; n_max];
    for (i, rec) in report.records.iter().enumerate() {
        let spec = specs.get(rec.slice_id).ok_or(GcnError::UnknownSlice {
            session: rec.session_id,
            slice: rec.slice_id,
            slices: k,
        })?;
        let row = bounds.normalize(&FeatureBounds::raw(rec, spec));
        for (j, v) in row.iter().enumerate() {
            features[[i, j]] = *v;
        }
        session_slice[i] = Some(rec.slice_id);
        session_ids[i] = Some(rec.session_id);
    }
    let mut g = SliceGraph::from_parts(n_max, k, session_slice, features);
    g.session_ids = session_ids;
    Ok(g)
}

/// `D^-1/2 (A + I) D^-1/2` with `D_ii = sum_j (A_ij + delta_ij)`.
pub fn normalize_adjacency(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "adjacency must be square");
    let degree: Vec<f64> = (0..n).map(|i| a.row(i).sum() + 1.0).collect();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let aij = a[[i, j]] + if i == j { 1.0 } else { 0.0 };
        if aij == 0.0 {
            0.0
        } else {
            aij / (degree[i] * degree[j]).sqrt()
        }
    })
}
