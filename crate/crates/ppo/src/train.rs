//! Parameter updates: PPO epochs over a rollout and the supervised warm-up.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xslice_gcn::{SliceGraph, FEATURES};

use crate::adam::Adam;
use crate::buffer::Transition;
use crate::error::PpoError;
use crate::gae::{gae, normalize_over};
use crate::loss::{ppo_loss, Sample};
use crate::policy::PolicyParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip_eps: f64,
    pub lr: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub rollout: usize,
    pub value_coef: f64,
    pub normalize_advantages: bool,
    /// Rescales each minibatch gradient to at most this global L2 norm.
    pub max_grad_norm: Option<f64>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            lambda: 0.2,
            clip_eps: 0.2,
            lr: 0.005,
            epochs: 16,
            minibatch: 10,
            rollout: 40,
            value_coef: 1.0,
            normalize_advantages: true,
            max_grad_norm: Some(2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
    pub mean_advantage: f64,
    pub steps: usize,
}

/// Owns the trainable copy of the parameters and the optimizer state.
#[derive(Debug, Clone)]
pub struct Learner {
    pub params: PolicyParams,
    pub config: PpoConfig,
    adam: Adam,
    rng: ChaCha8Rng,
}

impl Learner {
    pub fn new(params: PolicyParams, config: PpoConfig, seed: u64) -> Self {
        let adam = Adam::new(params.param_count(), config.lr);
        Self {
            params,
            config,
            adam,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// One PPO update over `transitions`. On a numerical failure the
    /// parameters and optimizer state are restored and the error returned.
    pub fn update(
        &mut self,
        transitions: &[Transition],
        bootstrap: f64,
    ) -> Result<UpdateStats, PpoError> {
        if transitions.is_empty() {
            return Ok(UpdateStats::default());
        }
        let cfg = self.config;
        let rewards: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = transitions.iter().map(|t| t.value).collect();
        let (adv, returns) = gae(&rewards, &values, bootstrap, cfg.gamma, cfg.lambda);
        let visible: Vec<bool> = transitions.iter().map(|t| t.actor_visible).collect();
        let adv_used = if cfg.normalize_advantages {
            normalize_over(&adv, &visible)
        } else {
            adv.clone()
        };
        let samples: Vec<Sample<'_>> = transitions
            .iter()
            .enumerate()
            .map(|(i, t)| Sample {
                graph: &t.graph,
                raw_action: &t.action.raw,
                old_log_prob: t.action.log_prob,
                advantage: adv_used[i],
                ret: returns[i],
                actor_visible: t.actor_visible,
            })
            .collect();

        let saved = (self.params.clone(), self.adam.clone());
        let mut stats = UpdateStats {
            mean_advantage: adv.iter().sum::<f64>() / adv.len() as f64,
            ..UpdateStats::default()
        };
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut flat = self.params.flatten();
        let result = (|| {
            for _ in 0..cfg.epochs {
                order.shuffle(&mut self.rng);
                for chunk in order.chunks(cfg.minibatch.max(1)) {
                    let batch: Vec<Sample<'_>> =
                        chunk.iter().map(|&i| samples[i].clone()).collect();
                    let mut out = ppo_loss(&self.params, &batch, cfg.clip_eps, cfg.value_coef)?;
                    if let Some(max) = cfg.max_grad_norm {
                        clip_norm(&mut out.grads, max);
                    }
                    self.adam.step(&mut flat, &out.grads);
                    if flat.iter().any(|v| !v.is_finite()) {
                        return Err(PpoError::NumericalHealth("parameters"));
                    }
                    self.params.assign_flat(&flat);
                    stats.policy_loss += out.policy_loss;
                    stats.value_loss += out.value_loss;
                    stats.clip_fraction += out.clip_fraction;
                    stats.steps += 1;
                }
            }
            Ok(())
        })();
        if let Err(e) = result {
            self.params = saved.0;
            self.adam = saved.1;
            return Err(e);
        }
        let s = stats.steps.max(1) as f64;
        stats.policy_loss /= s;
        stats.value_loss /= s;
        stats.clip_fraction /= s;
        Ok(stats)
    }

    /// Supervised pre-training of the actor toward the equal split
    /// (`mu_k = 1 / K`) and `sigma_k = target_sigma`, one optimizer step per
    /// synthetic state. Synthetic graphs hold a random number of sessions
    /// with uniformly drawn normalized features.
    pub fn warmup(
        &mut self,
        steps: usize,
        n_max: usize,
        target_sigma: f64,
    ) -> Result<(), PpoError> {
        if steps == 0 {
            return Ok(());
        }
        let k = self.params.slices();
        let target_mu = 1.0 / k as f64;
        let mut adam = Adam::new(self.params.param_count(), self.config.lr);
        let mut flat = self.params.flatten();
        let saved = self.params.clone();
        for _ in 0..steps {
            let g = synthetic_graph(&mut self.rng, n_max, k);
            let (out, cache) = self.params.forward(&g);
            let d_mu: Vec<f64> = out.mu.iter().map(|m| 2.0 * (m - target_mu)).collect();
            let d_sigma: Vec<f64> = out.sigma.iter().map(|s| 2.0 * (s - target_sigma)).collect();
            let grads = self.params.backward(&cache, &d_mu, &d_sigma, 0.0);
            adam.step(&mut flat, &grads);
            if flat.iter().any(|v| !v.is_finite()) {
                self.params = saved;
                return Err(PpoError::NumericalHealth("warm-up parameters"));
            }
            self.params.assign_flat(&flat);
        }
        Ok(())
    }
}

fn clip_norm(g: &mut [f64], max: f64) {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > max {
        let s = max / norm;
        g.iter_mut().for_each(|v| *v *= s);
    }
}

/// Random graph with 1..=n_max sessions spread over `slices` slices and
/// features drawn uniformly from the normalized range.
pub fn synthetic_graph<R: Rng + ?Sized>(rng: &mut R, n_max: usize, slices: usize) -> SliceGraph {
    let n = rng.gen_range(1..=n_max);
    let member: Vec<Option<usize>> = (0..n_max)
        .map(|i| (i < n).then(|| rng.gen_range(0..slices)))
        .collect();
    let mut feats = Array2::zeros((n_max + slices, FEATURES));
    for i in 0..n {
        for j in 0..FEATURES {
            feats[[i, j]] = rng.gen_range(0.0..1.0);
        }
    }
    SliceGraph::from_parts(n_max, slices, member, feats)
}
