//! Factorized categorical policies over (multi-)discrete action spaces.
//!
//! The actor emits one block of logits per action component; the joint
//! log-probability and entropy are sums over blocks.

use ndarray::{ArrayView1, ArrayViewMut1};
use rand::Rng;

use crate::env::{Action, ObsVec};
use crate::error::{Error, Result};
use crate::nn::MlpNet;

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

fn entropy_of(logp: &[f64]) -> f64 {
    -logp
        .iter()
        .map(|&l| {
            let p = l.exp();
            if p > 0.0 {
                p * l
            } else {
                0.0
            }
        })
        .sum::<f64>()
}

fn check_finite(logits: &[f64]) -> Result<()> {
    if logits.iter().all(|z| z.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("policy produced non-finite logits".into()))
    }
}

fn blocks<'a>(logits: &'a [f64], arities: &'a [usize]) -> impl Iterator<Item = (usize, &'a [f64])> + 'a {
    arities.iter().scan(0usize, move |start, &n| {
        let s = *start;
        *start += n;
        Some((s, &logits[s..s + n]))
    })
}

/// Joint log-probability of `action` and the policy entropy, both summed over components.
pub fn evaluate(logits: ArrayView1<f64>, arities: &[usize], action: &[usize]) -> (f64, f64) {
    let logits = logits.to_vec();
    let mut logp = 0.0;
    let mut entropy = 0.0;
    for ((_, block), &a) in blocks(&logits, arities).zip(action) {
        let ls = log_softmax(block);
        logp += ls[a];
        entropy += entropy_of(&ls);
    }
    (logp, entropy)
}

/// Like [`evaluate`], and writes `dL/dlogits` for a loss with
/// `dL/dlogp = dlogp` and `dL/dentropy = dentropy` into `grad`.
pub fn evaluate_with_grad(
    logits: ArrayView1<f64>,
    arities: &[usize],
    action: &[usize],
    dlogp: f64,
    dentropy: f64,
    mut grad: ArrayViewMut1<f64>,
) -> (f64, f64) {
    let logits = logits.to_vec();
    let mut logp = 0.0;
    let mut entropy = 0.0;
    for ((start, block), &a) in blocks(&logits, arities).zip(action) {
        let ls = log_softmax(block);
        let h = entropy_of(&ls);
        logp += ls[a];
        entropy += h;
        for (k, &l) in ls.iter().enumerate() {
            let p = l.exp();
            // ∂logp_a/∂z_k = 1[k=a] − p_k ; ∂H/∂z_k = −p_k (log p_k + H)
            let dlp = f64::from(u8::from(k == a)) - p;
            let dh = if p > 0.0 { -p * (l + h) } else { 0.0 };
            grad[start + k] = dlogp * dlp + dentropy * dh;
        }
    }
    (logp, entropy)
}

/// Per-component probabilities of the policy at `obs`.
pub fn probabilities(actor: &MlpNet, obs: &ObsVec, arities: &[usize]) -> Result<Vec<Vec<f64>>> {
    let logits = actor.forward(obs.as_slice())?;
    check_finite(&logits)?;
    Ok(blocks(&logits, arities)
        .map(|(_, b)| log_softmax(b).into_iter().map(f64::exp).collect())
        .collect())
}

/// Draws an action; returns it with its log-probability and the policy entropy (nats).
pub fn sample_action<R: Rng + ?Sized>(
    actor: &MlpNet,
    obs: &ObsVec,
    arities: &[usize],
    rng: &mut R,
) -> Result<(Action, f64, f64)> {
    let logits = actor.forward(obs.as_slice())?;
    check_finite(&logits)?;
    let mut action = Vec::with_capacity(arities.len());
    let mut logp = 0.0;
    let mut entropy = 0.0;
    for (_, block) in blocks(&logits, arities) {
        let ls = log_softmax(block);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut choice = ls.len() - 1;
        for (k, &l) in ls.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                choice = k;
                break;
            }
        }
        logp += ls[choice];
        entropy += entropy_of(&ls);
        action.push(choice);
    }
    Ok((Action(action), logp, entropy))
}

/// Most probable index per component, ties going to the lowest index.
pub fn greedy_action(actor: &MlpNet, obs: &ObsVec, arities: &[usize]) -> Result<Action> {
    let logits = actor.forward(obs.as_slice())?;
    check_finite(&logits)?;
    Ok(Action(
        blocks(&logits, arities)
            .map(|(_, b)| {
                b.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (k, &z)| if z > best.1 { (k, z) } else { best })
                    .0
            })
            .collect(),
    ))
}
