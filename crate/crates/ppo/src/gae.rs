/// Generalized advantage estimation by the backward recursion
/// `A_t = delta_t + gamma lambda A_{t+1}`, `A_T = 0`, with
/// `delta_t = r_t + gamma V(s_{t+1}) - V(s_t)` and `V(s_T) = bootstrap`.
///
/// Returns `(advantages, returns)` where `returns = advantages + values`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(
        rewards.len(),
        values.len(),
        "rewards and values differ in length"
    );
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap };
        let delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        adv[t] = next_adv;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shifts to zero mean and scales to unit standard deviation; a constant
/// input is only centred.
pub fn normalize(xs: &[f64]) -> Vec<f64> {
    normalize_over(xs, &vec![true; xs.len()])
}

/// Like [`normalize`], with mean and deviation taken over the entries where
/// `include` holds. All entries are shifted and scaled.
pub fn normalize_over(xs: &[f64], include: &[bool]) -> Vec<f64> {
    assert_eq!(xs.len(), include.len());
    let picked: Vec<f64> = xs
        .iter()
        .zip(include)
        .filter(|(_, &i)| i)
        .map(|(x, _)| *x)
        .collect();
    if picked.is_empty() {
        return xs.to_vec();
    }
    let n = picked.len() as f64;
    let mean = picked.iter().sum::<f64>() / n;
    let var = picked.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-8 {
        xs.iter().map(|x| x - mean).collect()
    } else {
        xs.iter().map(|x| (x - mean) / std).collect()
    }
}
