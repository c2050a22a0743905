//! PPO, PDPPO (dual critic) and PDPPO1C (single post-decision critic).

mod advantage;
mod agent;
mod loss;
pub mod policy;
mod returns;
mod train;

use serde::{Deserialize, Serialize};

use crate::env::{Action, ObsVec, PreStream};
use crate::error::{Error, Result};
use crate::nn::{Activation, OptimizerKind};

pub use advantage::{compute_advantages, normalize, Critics, Trajectory};
pub use agent::{Agent, UpdateStats};
pub use loss::{actor_loss, clip_ratio, clipped_surrogate, critic_loss, importance_ratio};
pub use policy::{greedy_action, sample_action};
pub use returns::discounted_returns;
pub use train::{train, RunLog, Trainer, WindowLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    /// One critic on pre-decision states, trained on total rewards.
    Ppo,
    /// Critics on both pre- and post-decision states; advantage is their max.
    Pdppo,
    /// One critic on post-decision states only.
    Pdppo1c,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Ppo, AgentKind::Pdppo, AgentKind::Pdppo1c];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Ppo => "ppo",
            AgentKind::Pdppo => "pdppo",
            AgentKind::Pdppo1c => "pdppo1c",
        }
    }

    pub fn uses_pre_critic(self) -> bool {
        matches!(self, AgentKind::Ppo | AgentKind::Pdppo)
    }

    pub fn uses_post_critic(self) -> bool {
        matches!(self, AgentKind::Pdppo | AgentKind::Pdppo1c)
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ppo" => Ok(AgentKind::Ppo),
            "pdppo" => Ok(AgentKind::Pdppo),
            "pdppo1c" => Ok(AgentKind::Pdppo1c),
            other => Err(Error::Config(format!(
                "unknown agent `{other}` (expected ppo, pdppo or pdppo1c)"
            ))),
        }
    }
}

/// Learning hyperparameters shared by all agent kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub clip_eps: f64,
    /// c1, weight of the entropy bonus.
    pub entropy_coef: f64,
    /// c2, weight of the critic losses in the reported actor loss.
    pub value_coef: f64,
    /// K, passes over each window.
    pub epochs: usize,
    /// u, environment steps between updates.
    pub window: usize,
    /// Defaults to `window / 4`.
    pub minibatch_size: Option<usize>,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub grad_max_norm: f64,
    pub advantage_normalize: bool,
    pub pre_stream: PreStream,
    /// Multiplies rewards before returns are formed; logs stay in raw units.
    pub reward_scale: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self::frozen_lake()
    }
}

impl AgentConfig {
    /// Frozen Lake hyperparameters.
    pub fn frozen_lake() -> Self {
        Self {
            gamma: 0.90,
            clip_eps: 0.2,
            entropy_coef: 0.001,
            value_coef: 0.7,
            epochs: 50,
            window: 500,
            minibatch_size: None,
            lr_actor: 0.00055,
            lr_critic: 0.001,
            grad_max_norm: 0.5,
            advantage_normalize: true,
            pre_stream: PreStream::DeterministicOnly,
            reward_scale: 1.0,
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            optimizer: OptimizerKind::Adam,
        }
    }

    /// Lot-sizing hyperparameters.
    pub fn lot_sizing() -> Self {
        Self {
            epochs: 40,
            window: 400,
            reward_scale: 0.01,
            ..Self::frozen_lake()
        }
    }

    pub fn effective_minibatch(&self) -> usize {
        self.minibatch_size.unwrap_or(self.window / 4).clamp(1, self.window.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return bad("clip_eps must be positive");
        }
        if self.window == 0 {
            return bad("window (u) must be at least 1");
        }
        if self.minibatch_size == Some(0) {
            return bad("minibatch_size must be positive");
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.grad_max_norm > 0.0) {
            return bad("grad_max_norm must be positive");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if !(self.entropy_coef.is_finite() && self.value_coef.is_finite()) {
            return bad("loss coefficients must be finite");
        }
        Ok(())
    }
}

/// One environment step as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: ObsVec,
    pub action: Action,
    pub logp_old: f64,
    pub det_reward: f64,
    pub post_obs: ObsVec,
    pub total_reward: f64,
    pub done: bool,
}
