//! Reference inter-slice policies the learned agent is compared against.
//!
//! * [`SingleSlice`]: every session in one pooled slice under proportional fair.
//! * [`Nvs`]: per-round time multiplexing by requested / averaged throughput.
//! * [`PropDemand`]: PRBs proportional to each slice's aggregate demand.

mod demand;
mod nvs;
mod single;

pub use demand::{prop_demand_alloc, slice_demands, PropDemand};
pub use nvs::{Nvs, NvsConfig, NvsState};
pub use single::{single_slice_alloc, SingleSlice};

/// Sum of the reported throughput of each slice's sessions, Mbps.
pub fn achieved_per_slice(k: usize, report: &xslice_core::KpmReport) -> Vec<f64> {
    let mut out = vec![0.0; k];
    for r in &report.records {
        if let Some(v) = out.get_mut(r.slice_id) {
            *v += r.throughput_mbps;
        }
    }
    out
}
