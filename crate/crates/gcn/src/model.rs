use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{normalize_adjacency, SliceGraph};

/// Layer weight matrices `W^(l)` of shape `widths[l] x widths[l + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub widths: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub seed: u64,
}

/// Gradients with the same layout as [`GcnParams::weights`], plus the
/// gradient with respect to the input features.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnGrads {
    pub weights: Vec<Array2<f64>>,
    pub features: Array2<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct GcnCache {
    a_hat: Array2<f64>,
    /// `A_hat H^(l)` per layer.
    agg: Vec<Array2<f64>>,
    /// `A_hat H^(l) W^(l)` per layer.
    pre: Vec<Array2<f64>>,
    /// Final node embeddings, canonical order.
    output: Array2<f64>,
    /// `perm[c]` is the graph node placed at canonical position `c`.
    perm: Vec<usize>,
    session_slice: Vec<Option<usize>>,
    slices: usize,
    fingerprint: u64,
}

fn fnv(weights: &[Array2<f64>]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in weights {
        for v in w.iter() {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}

impl GcnParams {
    /// Uniform fan-based initialization, `U(-a, a)` with
    /// `a = sqrt(6 / (fan_in + fan_out))`.
    pub fn init(widths: &[usize], seed: u64) -> Self {
        assert!(widths.len() >= 2, "a GCN needs at least one layer");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = widths
            .windows(2)
            .map(|w| {
                let a = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Array2::from_shape_fn((w[0], w[1]), |_| rng.gen_range(-a..a))
            })
            .collect();
        Self {
            widths: widths.to_vec(),
            weights,
            seed,
        }
    }

    pub fn layers(&self) -> usize {
        self.weights.len()
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("nonempty widths")
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .flat_map(|w| w.iter().copied())
            .collect()
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut it = flat.iter();
        for w in &mut self.weights {
            for v in w.iter_mut() {
                *v = *it.next().expect("length checked");
            }
        }
    }

    pub fn zero_grads(&self, graph_nodes: usize) -> GcnGrads {
        GcnGrads {
            weights: self
                .weights
                .iter()
                .map(|w| Array2::zeros(w.raw_dim()))
                .collect(),
            features: Array2::zeros((graph_nodes, self.widths[0])),
        }
    }

    /// State vector: per-slice mean of the final session embeddings,
    /// concatenated in slice order.
    pub fn forward(&self, graph: &SliceGraph) -> (Vec<f64>, GcnCache) {
        assert_eq!(
            graph.features.ncols(),
            self.widths[0],
            "feature width does not match the first layer"
        );
        // Real sessions are processed in a canonical order so the result does
        // not depend on how session nodes were labelled, down to the bit.
        let perm = canonical_order(graph);
        let adjacency = graph
            .adjacency
            .select(Axis(0), &perm)
            .select(Axis(1), &perm);
        let session_slice: Vec<Option<usize>> = perm[..graph.n_max]
            .iter()
            .map(|&i| graph.session_slice[i])
            .collect();
        let a_hat = normalize_adjacency(&adjacency);
        let last = self.layers() - 1;
        let mut h = graph.features.select(Axis(0), &perm);
        let mut agg = Vec::with_capacity(self.layers());
        let mut pre = Vec::with_capacity(self.layers());
        for (l, w) in self.weights.iter().enumerate() {
            let ah = a_hat.dot(&h);
            let z = ah.dot(w);
            h = if l < last {
                z.mapv(|v| v.max(0.0))
            } else {
                z.clone()
            };
            agg.push(ah);
            pre.push(z);
        }
        let cache = GcnCache {
            a_hat,
            agg,
            pre,
            output: h,
            perm,
            session_slice,
            slices: graph.slices,
            fingerprint: fnv(&self.weights),
        };
        (pool(&cache, self.output_width()), cache)
    }

    pub fn embed(&self, graph: &SliceGraph) -> Vec<f64> {
        self.forward(graph).0
    }

    /// Reverse-mode gradients of a scalar loss given `d_state`, its gradient
    /// with respect to the pooled state vector.
    pub fn backward(&self, cache: &GcnCache, d_state: &[f64]) -> GcnGrads {
        assert_eq!(
            cache.fingerprint,
            fnv(&self.weights),
            "forward cache was produced by different parameters"
        );
        let f = self.output_width();
        assert_eq!(d_state.len(), cache.slices * f, "state gradient length");
        let counts = slice_counts(cache);
        let n = cache.output.nrows();
        let mut dh = Array2::<f64>::zeros((n, f));
        for (i, k) in cache.session_slice.iter().enumerate() {
            if let Some(k) = *k {
                let scale = 1.0 / counts[k] as f64;
                for j in 0..f {
                    dh[[i, j]] = d_state[k * f + j] * scale;
                }
            }
        }
        let last = self.layers() - 1;
        let mut grads = vec![Array2::zeros((0, 0)); self.layers()];
        for l in (0..self.layers()).rev() {
            let dz = if l < last {
                let mut d = dh;
                d.zip_mut_with(&cache.pre[l], |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
                d
            } else {
                dh
            };
            grads[l] = cache.agg[l].t().dot(&dz);
            // A_hat is symmetric.
            dh = cache.a_hat.t().dot(&dz.dot(&self.weights[l].t()));
        }
        let mut features = Array2::zeros(dh.raw_dim());
        for (c, &node) in cache.perm.iter().enumerate() {
            features.row_mut(node).assign(&dh.row(c));
        }
        GcnGrads {
            weights: grads,
            features,
        }
    }
}

impl GcnCache {
    /// Final embedding of every node, in the graph's own node order.
    pub fn node_embeddings(&self) -> Array2<f64> {
        let mut out = Array2::zeros(self.output.raw_dim());
        for (c, &node) in self.perm.iter().enumerate() {
            out.row_mut(node).assign(&self.output.row(c));
        }
        out
    }
}

/// Session slots sorted by (slice, features), dummies last; slice nodes keep
/// their positions.
fn canonical_order(graph: &SliceGraph) -> Vec<usize> {
    let mut sessions: Vec<usize> = (0..graph.n_max).collect();
    sessions.sort_by(|&a, &b| {
        let key = |i: usize| graph.session_slice[i].unwrap_or(usize::MAX);
        key(a).cmp(&key(b)).then_with(|| {
            graph
                .features
                .row(a)
                .iter()
                .zip(graph.features.row(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    sessions.extend(graph.n_max..graph.node_count());
    sessions
}

fn slice_counts(cache: &GcnCache) -> Vec<usize> {
    let mut counts = vec![0usize; cache.slices];
    for k in cache.session_slice.iter().flatten() {
        counts[*k] += 1;
    }
    counts
}

fn pool(cache: &GcnCache, f: usize) -> Vec<f64> {
    let counts = slice_counts(cache);
    let mut out = vec![0.0; cache.slices * f];
    for (i, row) in cache.output.axis_iter(Axis(0)).enumerate() {
        if let Some(Some(k)) = cache.session_slice.get(i) {
            for j in 0..f {
                out[k * f + j] += row[j] / counts[*k] as f64;
            }
        }
    }
    out
}

impl GcnGrads {
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .flat_map(|w| w.iter().copied())
            .collect()
    }

    pub fn add_assign(&mut self, other: &GcnGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        if self.features.raw_dim() == other.features.raw_dim() {
            self.features += &other.features;
        }
    }
}
