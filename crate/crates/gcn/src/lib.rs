//! Graph encoding of a KPM report and the graph convolutional network that
//! compresses it into a fixed-size state vector.
//!
//! Sessions and slices are nodes of a bipartite graph: a session node is
//! joined to the node of the slice it belongs to. Session slots are padded
//! to a fixed `N_max` with featureless dummy nodes, so the parameter shapes
//! do not depend on how many sessions are active. Each layer computes
//! `H' = act(A_hat H W)` with `A_hat = D^-1/2 (A + I) D^-1/2`; hidden layers
//! use ReLU, the last one is linear, and the state is the per-slice mean of
//! the final session rows, concatenated over slices.

mod checkpoint;
mod error;
mod graph;
mod model;

pub use checkpoint::{read_params, write_params, GCN_MAGIC, GCN_VERSION};
pub use error::GcnError;
pub use graph::{build_graph, normalize_adjacency, FeatureBounds, SliceGraph, FEATURES};
pub use model::{GcnCache, GcnGrads, GcnParams};

/// Default number of session slots.
pub const DEFAULT_N_MAX: usize = 16;
/// Default layer widths: three layers of width 12.
pub const DEFAULT_WIDTHS: [usize; 4] = [FEATURES, 12, 12, 12];
