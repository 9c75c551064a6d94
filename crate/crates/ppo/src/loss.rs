//! Clipped-surrogate PPO loss and its gradient.

use xslice_gcn::SliceGraph;

use crate::error::PpoError;
use crate::policy::{gaussian_log_prob, PolicyParams};

/// One training example.
#[derive(Debug, Clone)]
pub struct Sample<'a> {
    pub graph: &'a SliceGraph,
    pub raw_action: &'a [f64],
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
    pub actor_visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    /// Share of actor-visible samples whose ratio left `[1 - eps, 1 + eps]`.
    pub clip_fraction: f64,
    pub grads: Vec<f64>,
}

/// `-mean(min(R A, clip(R, 1 - eps, 1 + eps) A)) + c_v mean((V - ret)^2)`
/// with `R = exp(log_prob - old_log_prob)`. The actor mean runs over
/// actor-visible samples only; the value mean over all samples.
pub fn ppo_loss(
    params: &PolicyParams,
    batch: &[Sample<'_>],
    eps: f64,
    value_coef: f64,
) -> Result<LossOutput, PpoError> {
    assert!(!batch.is_empty(), "empty minibatch");
    let n = batch.len() as f64;
    let n_actor = batch.iter().filter(|s| s.actor_visible).count();
    let mut grads = vec![0.0; params.param_count()];
    let mut policy_loss = 0.0;
    let mut value_loss = 0.0;
    let mut clipped = 0usize;
    for s in batch {
        let (out, cache) = params.forward(s.graph);
        let k = out.mu.len();
        let mut d_mu = vec![0.0; k];
        let mut d_sigma = vec![0.0; k];
        if s.actor_visible {
            let logp = gaussian_log_prob(s.raw_action, &out.mu, &out.sigma);
            let ratio = (logp - s.old_log_prob).exp();
            let r_clip = ratio.clamp(1.0 - eps, 1.0 + eps);
            if r_clip != ratio {
                clipped += 1;
            }
            let unclipped = ratio * s.advantage;
            let surrogate = unclipped.min(r_clip * s.advantage);
            policy_loss -= surrogate / n_actor as f64;
            // Gradient flows only through the unclipped branch when it is
            // the active minimum.
            if unclipped <= r_clip * s.advantage {
                let d_logp = -ratio * s.advantage / n_actor as f64;
                for j in 0..k {
                    let diff = s.raw_action[j] - out.mu[j];
                    let var = out.sigma[j] * out.sigma[j];
                    d_mu[j] = d_logp * diff / var;
                    d_sigma[j] =
                        d_logp * (-1.0 / out.sigma[j] + diff * diff / (var * out.sigma[j]));
                }
            }
        }
        let err = out.value - s.ret;
        value_loss += err * err / n;
        let d_value = value_coef * 2.0 * err / n;
        let g = params.backward(&cache, &d_mu, &d_sigma, d_value);
        for (a, b) in grads.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let loss = policy_loss + value_coef * value_loss;
    if !loss.is_finite() {
        return Err(PpoError::NumericalHealth("loss"));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(PpoError::NumericalHealth("gradient"));
    }
    Ok(LossOutput {
        loss,
        policy_loss,
        value_loss,
        clip_fraction: if n_actor == 0 {
            0.0
        } else {
            clipped as f64 / n_actor as f64
        },
        grads,
    })
}
