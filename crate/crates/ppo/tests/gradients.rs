use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xslice_gcn::SliceGraph;
use xslice_ppo::{
    gaussian_log_prob, logistic, ppo_loss, softplus, synthetic_graph, PolicyConfig, PolicyParams,
    Sample,
};

fn params(seed: u64, shared: bool) -> PolicyParams {
    let mut cfg = PolicyConfig::new(3, seed);
    cfg.shared_encoder = shared;
    let mut p = PolicyParams::new(&cfg);
    // Scale the actor output layer up so the actor gradients are not tiny.
    let last = p.actor.layers.len() - 1;
    p.actor.layers[last].w.mapv_inplace(|w| w * 50.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 77);
    for s in &mut p.pre_sigma {
        *s = rng.gen_range(-2.5..-1.0);
    }
    p
}

struct Case {
    graphs: Vec<SliceGraph>,
    actions: Vec<Vec<f64>>,
    old: Vec<f64>,
    adv: Vec<f64>,
    ret: Vec<f64>,
    visible: Vec<bool>,
}

impl Case {
    fn new(p: &PolicyParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4;
        let mut c = Case {
            graphs: vec![],
            actions: vec![],
            old: vec![],
            adv: vec![],
            ret: vec![],
            visible: vec![],
        };
        for i in 0..n {
            let g = synthetic_graph(&mut rng, 6, 3);
            let (out, _) = p.forward(&g);
            let a: Vec<f64> = out
                .mu
                .iter()
                .zip(&out.sigma)
                .map(|(m, s)| m + s * rng.gen_range(-1.5..1.5))
                .collect();
            let lp = gaussian_log_prob(&a, &out.mu, &out.sigma);
            // Ratios near one (inside the clip range), except sample 2 which
            // sits on the clip plateau and sample 3 which is actor-masked.
            let shift = if i == 2 {
                -0.7
            } else {
                rng.gen_range(-0.05..0.05)
            };
            c.old.push(lp + shift);
            c.adv.push(if i == 2 {
                1.0
            } else {
                rng.gen_range(-1.5..1.5)
            });
            c.ret.push(rng.gen_range(-1.0..1.0));
            c.visible.push(i != 3);
            c.graphs.push(g);
            c.actions.push(a);
        }
        c
    }

    fn samples(&self) -> Vec<Sample<'_>> {
        (0..self.graphs.len())
            .map(|i| Sample {
                graph: &self.graphs[i],
                raw_action: &self.actions[i],
                old_log_prob: self.old[i],
                advantage: self.adv[i],
                ret: self.ret[i],
                actor_visible: self.visible[i],
            })
            .collect()
    }
}

/// Forward-only evaluation of the clipped objective.
fn oracle_loss(p: &PolicyParams, case: &Case) -> f64 {
    let n = case.graphs.len() as f64;
    let n_actor = case.visible.iter().filter(|v| **v).count() as f64;
    let mut loss = 0.0;
    for i in 0..case.graphs.len() {
        let (out, _) = p.forward(&case.graphs[i]);
        if case.visible[i] {
            let r = (gaussian_log_prob(&case.actions[i], &out.mu, &out.sigma) - case.old[i]).exp();
            let a = case.adv[i];
            loss -= (r * a).min(r.clamp(0.8, 1.2) * a) / n_actor;
        }
        loss += (out.value - case.ret[i]).powi(2) / n;
    }
    loss
}

/// Every encoder and sigma parameter plus `mlp_picks` random parameters of
/// each MLP. Central differences carry ~1e-10 of rounding noise on an O(1)
/// loss, so the relative bound gets that much absolute slack.
fn check_parameters(p: &PolicyParams, case: &Case, mlp_picks: usize, seed: u64) -> (usize, f64) {
    let batch = case.samples();
    let out = ppo_loss(p, &batch, 0.2, 1.0).unwrap();
    assert!((out.loss - oracle_loss(p, case)).abs() < 1e-12);
    let analytic = out.grads;
    let base = p.flatten();
    let actor = p.actor_range();
    let critic = actor.end..base.len() - p.slices();
    let mut idx: Vec<usize> = (0..actor.start).chain(critic.end..base.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in [actor, critic] {
        idx.extend((0..mlp_picks).map(|_| rng.gen_range(r.clone())));
    }
    let mut q = p.clone();
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    for &i in &idx {
        let mut x = base.clone();
        x[i] = base[i] + h;
        q.assign_flat(&x);
        let lp = oracle_loss(&q, case);
        x[i] = base[i] - h;
        q.assign_flat(&x);
        let lm = oracle_loss(&q, case);
        let numeric = (lp - lm) / (2.0 * h);
        let a = analytic[i];
        let scale = a.abs().max(numeric.abs());
        assert!(
            (a - numeric).abs() <= 1e-4 * scale + 1e-9,
            "param {i}: analytic {a:e} numeric {numeric:e}"
        );
        if scale > 1e-5 {
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    (idx.len(), worst)
}

#[test]
fn loss_gradients_match_finite_differences_shared_encoder() {
    for seed in 0..20 {
        let p = params(seed, true);
        let case = Case::new(&p, 1000 + seed);
        let (n, worst) = check_parameters(&p, &case, 300, seed);
        assert!(n > 1000 && worst < 1e-4);
    }
}

#[test]
fn loss_gradients_match_finite_differences_separate_encoders() {
    for seed in 0..5 {
        let p = params(seed, false);
        let case = Case::new(&p, 2000 + seed);
        check_parameters(&p, &case, 200, seed);
    }
}

#[test]
fn gradient_reaches_every_block() {
    let p = params(3, true);
    let case = Case::new(&p, 9);
    let g = ppo_loss(&p, &case.samples(), 0.2, 1.0).unwrap().grads;
    let enc = p.encoder.param_count();
    let actor = p.actor_range();
    let sigma = g.len() - p.slices();
    let nonzero = |r: std::ops::Range<usize>| g[r].iter().any(|v| *v != 0.0);
    assert!(nonzero(0..enc));
    assert!(nonzero(actor.clone()));
    assert!(nonzero(actor.end..sigma));
    assert!(nonzero(sigma..g.len()));
}

#[test]
fn clipped_and_masked_samples_give_no_actor_gradient() {
    let p = params(5, true);
    let case = Case::new(&p, 11);
    let all = case.samples();
    let actor = p.actor_range();
    for i in [2, 3] {
        let one = &all[i..=i];
        let out = ppo_loss(&p, one, 0.2, 1.0).unwrap();
        assert!(
            out.grads[actor.clone()].iter().all(|v| *v == 0.0),
            "sample {i}"
        );
        let sigma = out.grads.len() - p.slices();
        assert!(out.grads[sigma..].iter().all(|v| *v == 0.0));
    }
    // The masked sample still trains the critic.
    let out = ppo_loss(&p, &all[3..=3], 0.2, 1.0).unwrap();
    assert!(out.grads[actor.end..].iter().any(|v| *v != 0.0));
    assert_eq!(out.policy_loss, 0.0);
}

#[test]
fn identity_ratio_gives_minus_mean_advantage() {
    let p = params(8, true);
    let mut case = Case::new(&p, 3);
    for i in 0..case.graphs.len() {
        let (out, _) = p.forward(&case.graphs[i]);
        case.old[i] = gaussian_log_prob(&case.actions[i], &out.mu, &out.sigma);
        case.visible[i] = true;
    }
    let out = ppo_loss(&p, &case.samples(), 0.2, 1.0).unwrap();
    let mean_adv = case.adv.iter().sum::<f64>() / case.adv.len() as f64;
    assert!((out.policy_loss + mean_adv).abs() < 1e-12);
    assert_eq!(out.clip_fraction, 0.0);
}

fn dense_oracle(layers: &[(Vec<Vec<f64>>, Vec<f64>)], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for (l, (w, b)) in layers.iter().enumerate() {
        let mut z = b.clone();
        for (i, row) in w.iter().enumerate() {
            for (j, wij) in row.iter().enumerate() {
                z[j] += h[i] * wij;
            }
        }
        h = if l + 1 < layers.len() {
            z.iter().map(|v| v.tanh()).collect()
        } else {
            z
        };
    }
    h
}

fn to_nested(m: &xslice_ppo::Mlp) -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
    m.layers
        .iter()
        .map(|d| {
            let w = d.w.rows().into_iter().map(|r| r.to_vec()).collect();
            (w, d.b.to_vec())
        })
        .collect()
}

#[test]
fn heads_match_dense_oracle() {
    for seed in 0..50 {
        let mut cfg = PolicyConfig::new(1 + (seed as usize % 4), seed);
        cfg.seed = seed;
        let mut p = PolicyParams::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 500);
        for d in p.actor.layers.iter_mut().chain(p.critic.layers.iter_mut()) {
            d.w.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
            d.b.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        }
        for s in &mut p.pre_sigma {
            *s = rng.gen_range(-3.0..3.0);
        }
        let state: Vec<f64> = (0..cfg.state_dim())
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect();
        let (out, _) = p.forward_state(&state);
        let logits = dense_oracle(&to_nested(&p.actor), &state);
        let value = dense_oracle(&to_nested(&p.critic), &state)[0];
        for k in 0..cfg.slices {
            let mu = 1.0 / (1.0 + (-logits[k]).exp());
            assert!((out.mu[k] - mu).abs() < 1e-10);
            let sigma = (1.0 + p.pre_sigma[k].exp()).ln();
            assert!((out.sigma[k] - sigma).abs() < 1e-10);
            assert!(out.mu[k] > 0.0 && out.mu[k] < 1.0 && out.sigma[k] > 0.0);
        }
        assert!((out.value - value).abs() < 1e-10);
        assert_eq!(logistic(0.0), 0.5);
        assert!(softplus(-30.0) > 0.0);
    }
}
