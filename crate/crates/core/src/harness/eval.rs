use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::stats::aggregate;
use crate::agents::greedy_action;
use crate::env::PostDecisionEnv;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub mean_return: f64,
    pub sd_return: f64,
    pub returns: Vec<f64>,
}

/// Plays `episodes` full episodes with the greedy actor (no learning).
/// Episode reset seeds come from `seed`, so the report is reproducible.
pub fn evaluate<E: PostDecisionEnv>(ck: &Checkpoint, env: &mut E, episodes: usize, seed: u64) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::Argument("episodes must be at least 1".into()));
    }
    if env.obs_dim() != ck.actor.input_dim() || env.action_spec().arities() != ck.arities {
        return Err(Error::Structure(
            "checkpoint does not match the environment's observation or action space".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(4);
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(rng.next_u64());
        let mut total = 0.0;
        loop {
            let action = greedy_action(&ck.actor, &obs, &ck.arities)?;
            let out = env.step(&action)?;
            total += out.total_reward;
            obs = out.next_obs;
            if out.done {
                break;
            }
        }
        returns.push(total);
    }
    let (mean_return, sd_return) = aggregate(&returns)?;
    Ok(EvalReport {
        episodes,
        mean_return,
        sd_return,
        returns,
    })
}
