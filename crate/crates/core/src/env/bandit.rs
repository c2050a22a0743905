//! One-state bandit used to sanity-check the direction of policy updates.
//!
//! The arm's reward is known as soon as it is pulled, so it is paid in the
//! deterministic phase; the post-decision observation identifies the arm.

use super::{Action, ActionSpec, ObsVec, Phase, PostDecisionEnv};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct TwoArmBandit {
    rewards: [f64; 2],
    phase: Phase,
}

impl TwoArmBandit {
    pub fn new(rewards: [f64; 2]) -> Self {
        Self {
            rewards,
            phase: Phase::NeedsReset,
        }
    }

    /// Index of the arm with the larger reward.
    pub fn best_arm(&self) -> usize {
        usize::from(self.rewards[1] > self.rewards[0])
    }

    fn pre_obs() -> ObsVec {
        ObsVec::from_finite(vec![1.0, 0.0, 0.0])
    }
}

impl Default for TwoArmBandit {
    fn default() -> Self {
        Self::new([1.0, 0.0])
    }
}

impl PostDecisionEnv for TwoArmBandit {
    fn obs_dim(&self) -> usize {
        3
    }

    fn action_spec(&self) -> ActionSpec {
        ActionSpec::Discrete(2)
    }

    fn reset(&mut self, _seed: u64) -> ObsVec {
        self.phase = Phase::PreDecision;
        Self::pre_obs()
    }

    fn step_deterministic(&mut self, action: &Action) -> Result<(ObsVec, f64)> {
        self.action_spec().validate(action)?;
        self.phase.expect_pre()?;
        let arm = action.0[0];
        let mut post = vec![0.0; 3];
        post[1 + arm] = 1.0;
        self.phase = Phase::PostDecision;
        Ok((ObsVec::from_finite(post), self.rewards[arm]))
    }

    fn step_stochastic(&mut self) -> Result<(ObsVec, f64, bool)> {
        self.phase.expect_post()?;
        self.phase = Phase::Done;
        Ok((Self::pre_obs(), 0.0, true))
    }
}
