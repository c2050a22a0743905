use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::nn::MlpNet;

const MAX_LOG_RATIO: f64 = 50.0;

/// `π_new(a|s) / π_old(a|s)` from log-probabilities, with the exponent clamped to ±50.
pub fn importance_ratio(logp_new: f64, logp_old: f64) -> f64 {
    (logp_new - logp_old).clamp(-MAX_LOG_RATIO, MAX_LOG_RATIO).exp()
}

pub fn clip_ratio(ratio: f64, clip_eps: f64) -> f64 {
    ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps)
}

/// Pessimistic clipped surrogate `min(ρA, clip(ρ)A)` and whether the
/// unclipped branch is the active one (it carries the gradient).
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_eps: f64) -> (f64, bool) {
    let unclipped = ratio * advantage;
    let clipped = clip_ratio(ratio, clip_eps) * advantage;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

/// Actor objective as a loss to minimize:
/// `mean(−min(ρA, clip(ρ)A)) − c1·mean(H) + c2·Σ critic_losses`.
///
/// The critic-loss term does not depend on actor parameters.
pub fn actor_loss(
    ratios: &[f64],
    advantages: &[f64],
    entropies: &[f64],
    critic_losses: &[f64],
    clip_eps: f64,
    entropy_coef: f64,
    value_coef: f64,
) -> f64 {
    assert!(
        ratios.len() == advantages.len() && ratios.len() == entropies.len() && !ratios.is_empty(),
        "ratios, advantages and entropies must align"
    );
    let n = ratios.len() as f64;
    let surrogate: f64 = ratios
        .iter()
        .zip(advantages)
        .map(|(&r, &a)| clipped_surrogate(r, a, clip_eps).0)
        .sum::<f64>()
        / n;
    let entropy = entropies.iter().sum::<f64>() / n;
    -surrogate - entropy_coef * entropy + value_coef * critic_losses.iter().sum::<f64>()
}

/// Mean squared error between `critic(obs)` and `returns`.
pub fn critic_loss(critic: &MlpNet, obs: ArrayView2<f64>, returns: &[f64]) -> Result<f64> {
    if obs.nrows() != returns.len() || returns.is_empty() {
        return Err(Error::Argument(
            "observation batch and returns must be nonempty and aligned".into(),
        ));
    }
    let values = critic.forward_batch(obs)?;
    Ok(mse(values.column(0).iter().copied(), returns))
}

pub(crate) fn mse(values: impl Iterator<Item = f64>, targets: &[f64]) -> f64 {
    values
        .zip(targets)
        .map(|(v, r)| (v - r) * (v - r))
        .sum::<f64>()
        / targets.len() as f64
}
