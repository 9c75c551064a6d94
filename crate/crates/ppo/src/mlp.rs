use ndarray::{Array1, Array2};
use rand::Rng;

/// Fully connected layer `y = x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Tanh hidden layers, linear output. Also used as its own gradient
/// container.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Array1<f64>>,
}

impl Mlp {
    /// `sizes = [in, h, ..., out]`; the last layer's initial weights are
    /// multiplied by `last_scale`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], last_scale: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2);
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, s)| {
                let a = (6.0 / (s[0] + s[1]) as f64).sqrt();
                let scale = if l + 1 == n { last_scale } else { 1.0 };
                Dense {
                    w: Array2::from_shape_fn((s[0], s[1]), |_| rng.gen_range(-a..a) * scale),
                    b: Array1::zeros(s[1]),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|d| Dense {
                    w: Array2::zeros(d.w.raw_dim()),
                    b: Array1::zeros(d.b.len()),
                })
                .collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].w.nrows()];
        s.extend(self.layers.iter().map(|d| d.w.ncols()));
        s
    }

    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, MlpCache) {
        let mut h = Array1::from(x.to_vec());
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        for (l, d) in self.layers.iter().enumerate() {
            let z = h.dot(&d.w) + &d.b;
            inputs.push(h);
            h = if l < last { z.mapv(f64::tanh) } else { z };
        }
        (h.to_vec(), MlpCache { inputs })
    }

    /// Returns parameter gradients and the gradient with respect to the input.
    pub fn backward(&self, cache: &MlpCache, dy: &[f64]) -> (Mlp, Vec<f64>) {
        let mut grads = self.zeros_like();
        let mut d = Array1::from(dy.to_vec());
        for l in (0..self.layers.len()).rev() {
            let x = &cache.inputs[l];
            let g = &mut grads.layers[l];
            for i in 0..x.len() {
                for j in 0..d.len() {
                    g.w[[i, j]] = x[i] * d[j];
                }
            }
            g.b.assign(&d);
            let dx = self.layers[l].w.dot(&d);
            // inputs of layer l > 0 are tanh outputs of layer l - 1
            d = if l > 0 {
                dx * x.mapv(|t| 1.0 - t * t)
            } else {
                dx
            };
        }
        (grads, d.to_vec())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|d| d.w.len() + d.b.len()).sum()
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for d in &self.layers {
            out.extend(d.w.iter());
            out.extend(d.b.iter());
        }
    }

    /// Consumes `param_count()` values from the front of `flat`.
    pub fn assign_from(&mut self, flat: &mut std::slice::Iter<'_, f64>) {
        for d in &mut self.layers {
            for v in d.w.iter_mut().chain(d.b.iter_mut()) {
                *v = *flat.next().expect("flat parameter vector too short");
            }
        }
    }
}
