//! Actor/critic parameters on top of the graph encoder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use xslice_gcn::{GcnCache, GcnParams, SliceGraph, DEFAULT_WIDTHS};

use crate::mlp::{Mlp, MlpCache};

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn softplus_inverse(y: f64) -> f64 {
    assert!(y > 0.0);
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub slices: usize,
    /// Hidden width of both MLPs.
    pub hidden: usize,
    /// Linear layers per MLP.
    pub mlp_layers: usize,
    pub gcn_widths: Vec<usize>,
    /// One encoder feeding both heads, or a private encoder per head.
    pub shared_encoder: bool,
    pub init_sigma: f64,
    pub seed: u64,
}

impl PolicyConfig {
    pub fn new(slices: usize, seed: u64) -> Self {
        Self {
            slices,
            hidden: 32,
            mlp_layers: 4,
            gcn_widths: DEFAULT_WIDTHS.to_vec(),
            shared_encoder: true,
            init_sigma: 0.2,
            seed,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.slices * self.gcn_widths.last().expect("gcn widths")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub encoder: GcnParams,
    /// Private critic encoder when the encoder is not shared.
    pub critic_encoder: Option<GcnParams>,
    pub actor: Mlp,
    pub critic: Mlp,
    /// State-independent pre-softplus standard deviations, one per slice.
    pub pre_sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub state: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct PolicyCache {
    gcn: Option<GcnCache>,
    critic_gcn: Option<GcnCache>,
    actor: MlpCache,
    critic: MlpCache,
    mu: Vec<f64>,
}

/// A sampled action: the raw Gaussian draw, its projection onto `[0, 1]`
/// and the log-density of the raw draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub raw: Vec<f64>,
    pub clipped: Vec<f64>,
    pub log_prob: f64,
}

/// Sum of independent Gaussian log-densities at `x`.
pub fn gaussian_log_prob(x: &[f64], mu: &[f64], sigma: &[f64]) -> f64 {
    x.iter()
        .zip(mu)
        .zip(sigma)
        .map(|((x, m), s)| {
            let z = (x - m) / s;
            -0.5 * LN_2PI - s.ln() - 0.5 * z * z
        })
        .sum()
}

pub fn sample_action<R: Rng + ?Sized>(mu: &[f64], sigma: &[f64], rng: &mut R) -> Action {
    let raw: Vec<f64> = mu
        .iter()
        .zip(sigma)
        .map(|(m, s)| {
            let xi: f64 = rng.sample(StandardNormal);
            m + s * xi
        })
        .collect();
    let clipped = raw.iter().map(|r| r.clamp(0.0, 1.0)).collect();
    let log_prob = gaussian_log_prob(&raw, mu, sigma);
    Action {
        raw,
        clipped,
        log_prob,
    }
}

impl PolicyParams {
    pub fn new(cfg: &PolicyConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let encoder = GcnParams::init(&cfg.gcn_widths, rng.gen());
        let critic_encoder =
            (!cfg.shared_encoder).then(|| GcnParams::init(&cfg.gcn_widths, rng.gen()));
        let sizes = |out: usize| {
            let mut s = vec![cfg.state_dim()];
            s.extend(std::iter::repeat_n(cfg.hidden, cfg.mlp_layers - 1));
            s.push(out);
            s
        };
        let actor = Mlp::new(&sizes(cfg.slices), 0.01, &mut rng);
        let critic = Mlp::new(&sizes(1), 1.0, &mut rng);
        Self {
            encoder,
            critic_encoder,
            actor,
            critic,
            pre_sigma: vec![softplus_inverse(cfg.init_sigma); cfg.slices],
        }
    }

    pub fn slices(&self) -> usize {
        self.pre_sigma.len()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.pre_sigma.iter().map(|&p| softplus(p)).collect()
    }

    /// Actor and critic heads on an already encoded state. With a private
    /// critic encoder, `critic_state` is that encoder's output.
    pub fn heads(
        &self,
        state: &[f64],
        critic_state: &[f64],
    ) -> (Vec<f64>, Vec<f64>, f64, MlpCache, MlpCache) {
        let (logits, actor) = self.actor.forward(state);
        let (v, critic) = self.critic.forward(critic_state);
        let mu = logits.iter().map(|&z| logistic(z)).collect();
        (mu, self.sigma(), v[0], actor, critic)
    }

    pub fn forward(&self, graph: &SliceGraph) -> (PolicyOutput, PolicyCache) {
        let (state, gcn) = self.encoder.forward(graph);
        let (critic_state, critic_gcn) = match &self.critic_encoder {
            Some(enc) => {
                let (s, c) = enc.forward(graph);
                (Some(s), Some(c))
            }
            None => (None, None),
        };
        let (mu, sigma, value, actor, critic) =
            self.heads(&state, critic_state.as_deref().unwrap_or(&state));
        let cache = PolicyCache {
            gcn: Some(gcn),
            critic_gcn,
            actor,
            critic,
            mu: mu.clone(),
        };
        (
            PolicyOutput {
                state,
                mu,
                sigma,
                value,
            },
            cache,
        )
    }

    /// Forward pass from a precomputed state, bypassing the encoder. The
    /// cache yields no encoder gradients.
    pub fn forward_state(&self, state: &[f64]) -> (PolicyOutput, PolicyCache) {
        let (mu, sigma, value, actor, critic) = self.heads(state, state);
        let cache = PolicyCache {
            gcn: None,
            critic_gcn: None,
            actor,
            critic,
            mu: mu.clone(),
        };
        (
            PolicyOutput {
                state: state.to_vec(),
                mu,
                sigma,
                value,
            },
            cache,
        )
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count()
            + self.critic_encoder.as_ref().map_or(0, |e| e.param_count())
            + self.actor.param_count()
            + self.critic.param_count()
            + self.pre_sigma.len()
    }

    /// Flat layout: encoder, critic encoder (if any), actor, critic, pre-sigma.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend(self.encoder.flatten());
        if let Some(e) = &self.critic_encoder {
            out.extend(e.flatten());
        }
        self.actor.flatten_into(&mut out);
        self.critic.flatten_into(&mut out);
        out.extend(&self.pre_sigma);
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let n = self.encoder.param_count();
        self.encoder.assign_flat(&flat[..n]);
        let mut off = n;
        if let Some(e) = &mut self.critic_encoder {
            let m = e.param_count();
            e.assign_flat(&flat[off..off + m]);
            off += m;
        }
        let mut it = flat[off..].iter();
        self.actor.assign_from(&mut it);
        self.critic.assign_from(&mut it);
        for p in &mut self.pre_sigma {
            *p = *it.next().expect("length checked");
        }
    }

    /// Index range of the actor MLP inside the flat layout.
    pub fn actor_range(&self) -> std::ops::Range<usize> {
        let start = self.encoder.param_count()
            + self.critic_encoder.as_ref().map_or(0, |e| e.param_count());
        start..start + self.actor.param_count()
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }

    /// Flat gradient given gradients of a scalar loss with respect to
    /// `mu`, `sigma` and the value.
    pub fn backward(
        &self,
        cache: &PolicyCache,
        d_mu: &[f64],
        d_sigma: &[f64],
        d_value: f64,
    ) -> Vec<f64> {
        let d_logits: Vec<f64> = d_mu
            .iter()
            .zip(&cache.mu)
            .map(|(g, m)| g * m * (1.0 - m))
            .collect();
        let (g_actor, ds_actor) = self.actor.backward(&cache.actor, &d_logits);
        let (g_critic, ds_critic) = self.critic.backward(&cache.critic, &[d_value]);
        let mut out = Vec::with_capacity(self.param_count());
        match (&cache.gcn, &self.critic_encoder) {
            (Some(gc), None) => {
                let ds: Vec<f64> = ds_actor
                    .iter()
                    .zip(&ds_critic)
                    .map(|(a, b)| a + b)
                    .collect();
                out.extend(self.encoder.backward(gc, &ds).flatten());
            }
            (Some(gc), Some(enc)) => {
                out.extend(self.encoder.backward(gc, &ds_actor).flatten());
                let cc = cache.critic_gcn.as_ref().expect("critic encoder cache");
                out.extend(enc.backward(cc, &ds_critic).flatten());
            }
            (None, critic_enc) => {
                let n =
                    self.encoder.param_count() + critic_enc.as_ref().map_or(0, |e| e.param_count());
                out.extend(std::iter::repeat_n(0.0, n));
            }
        }
        g_actor.flatten_into(&mut out);
        g_critic.flatten_into(&mut out);
        out.extend(
            d_sigma
                .iter()
                .zip(&self.pre_sigma)
                .map(|(g, &p)| g * logistic(p)),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_state_gives_half_means() {
        let cfg = PolicyConfig::new(3, 1);
        let mut p = PolicyParams::new(&cfg);
        for d in p
            .actor
            .layers
            .last_mut()
            .into_iter()
            .chain(p.critic.layers.last_mut())
        {
            d.w.fill(0.0);
            d.b.fill(0.0);
        }
        let (out, _) = p.forward_state(&vec![0.0; cfg.state_dim()]);
        assert_eq!(out.mu, vec![0.5; 3]);
        assert_eq!(out.value, 0.0);
        assert!((out.sigma[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn standard_normal_log_density_at_mean() {
        let lp = gaussian_log_prob(&[0.5], &[0.5], &[1.0]);
        assert!((lp + 0.918_938_533_204_672_7).abs() < 1e-15);
    }

    #[test]
    fn flat_roundtrip_and_count() {
        let mut cfg = PolicyConfig::new(3, 4);
        for shared in [true, false] {
            cfg.shared_encoder = shared;
            let p = PolicyParams::new(&cfg);
            let mut q = PolicyParams::new(&PolicyConfig {
                seed: 99,
                ..cfg.clone()
            });
            q.assign_flat(&p.flatten());
            assert_eq!(p.flatten(), q.flatten());
            assert_eq!(p.flatten().len(), p.param_count());
        }
    }

    #[test]
    fn softplus_inverse_roundtrip() {
        for y in [0.01, 0.1, 1.0, 5.0, 40.0] {
            assert!((softplus(softplus_inverse(y)) - y).abs() < 1e-12 * y.max(1.0));
        }
    }
}
