//! Two-phase environment contract.
//!
//! A step is split into a deterministic phase, which maps `(s, a)` to the
//! post-decision state `s^x` with its immediate reward, and a stochastic phase,
//! which realizes exogenous noise and yields the next state `s'`.
//! Valid call sequences are `reset (step_deterministic step_stochastic)*`.

pub mod bandit;
pub mod frozenlake;
pub mod lotsizing;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bandit::TwoArmBandit;
pub use frozenlake::{FrozenLake, FrozenLakeConfig};
pub use lotsizing::{InstanceSpec, LotSizing, LotSizingParams};

/// Observation vector with an environment-declared, fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsVec(Vec<f64>);

impl ObsVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("observation contains non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Shape of the action space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpec {
    Discrete(usize),
    MultiDiscrete(Vec<usize>),
}

impl ActionSpec {
    /// Arity of every categorical component; a discrete space has one.
    pub fn arities(&self) -> Vec<usize> {
        match self {
            ActionSpec::Discrete(n) => vec![*n],
            ActionSpec::MultiDiscrete(ns) => ns.clone(),
        }
    }

    pub fn total_logits(&self) -> usize {
        self.arities().iter().sum()
    }

    pub fn validate(&self, action: &Action) -> Result<()> {
        let arities = self.arities();
        if action.0.len() != arities.len() {
            return Err(Error::InvalidAction(format!(
                "expected {} components, got {}",
                arities.len(),
                action.0.len()
            )));
        }
        for (j, (&a, &n)) in action.0.iter().zip(&arities).enumerate() {
            if a >= n {
                return Err(Error::InvalidAction(format!(
                    "component {j}: index {a} out of range 0..{n}"
                )));
            }
        }
        Ok(())
    }
}

/// One index per categorical component of the action space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action(pub Vec<usize>);

impl Action {
    pub fn discrete(index: usize) -> Self {
        Action(vec![index])
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }
}

/// Result of both phases of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub post_obs: ObsVec,
    pub det_reward: f64,
    pub next_obs: ObsVec,
    /// `det_reward` plus the stochastic-phase reward.
    pub total_reward: f64,
    pub done: bool,
    pub info: BTreeMap<String, f64>,
}

/// Which reward feeds the pre-decision return stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreStream {
    #[default]
    DeterministicOnly,
    Total,
}

/// Environment whose transition splits into deterministic and stochastic phases.
pub trait PostDecisionEnv {
    fn obs_dim(&self) -> usize;

    fn action_spec(&self) -> ActionSpec;

    /// Starts a new episode, reseeding the stochastic phase.
    fn reset(&mut self, seed: u64) -> ObsVec;

    /// Applies the action's deterministic effects; returns `s^x` and its reward.
    fn step_deterministic(&mut self, action: &Action) -> Result<(ObsVec, f64)>;

    /// Realizes exogenous randomness; returns `s'`, the stochastic reward and `done`.
    fn step_stochastic(&mut self) -> Result<(ObsVec, f64, bool)>;

    /// Diagnostic values from the most recent phase.
    fn info(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    /// Both phases in one call.
    fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        let (post_obs, det_reward) = self.step_deterministic(action)?;
        let (next_obs, stoch_reward, done) = self.step_stochastic()?;
        Ok(StepOutcome {
            post_obs,
            det_reward,
            next_obs,
            total_reward: det_reward + stoch_reward,
            done,
            info: self.info(),
        })
    }
}

impl<E: PostDecisionEnv + ?Sized> PostDecisionEnv for Box<E> {
    fn obs_dim(&self) -> usize {
        (**self).obs_dim()
    }
    fn action_spec(&self) -> ActionSpec {
        (**self).action_spec()
    }
    fn reset(&mut self, seed: u64) -> ObsVec {
        (**self).reset(seed)
    }
    fn step_deterministic(&mut self, action: &Action) -> Result<(ObsVec, f64)> {
        (**self).step_deterministic(action)
    }
    fn step_stochastic(&mut self) -> Result<(ObsVec, f64, bool)> {
        (**self).step_stochastic()
    }
    fn info(&self) -> BTreeMap<String, f64> {
        (**self).info()
    }
}

/// Phase bookkeeping shared by the environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    NeedsReset,
    PreDecision,
    PostDecision,
    Done,
}

impl Phase {
    pub(crate) fn expect_pre(self) -> Result<()> {
        match self {
            Phase::PreDecision => Ok(()),
            Phase::PostDecision => Err(Error::PhaseOrder(
                "step_deterministic called twice without step_stochastic".into(),
            )),
            Phase::Done => Err(Error::PhaseOrder("episode finished; call reset".into())),
            Phase::NeedsReset => Err(Error::PhaseOrder("environment not reset".into())),
        }
    }

    pub(crate) fn expect_post(self) -> Result<()> {
        match self {
            Phase::PostDecision => Ok(()),
            _ => Err(Error::PhaseOrder(
                "step_stochastic called without a pending deterministic phase".into(),
            )),
        }
    }
}
