use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Agent, AgentConfig, AgentKind, Transition, UpdateStats};
use crate::env::{ObsVec, PostDecisionEnv};
use crate::error::{Error, Result};

/// Metrics for one collection window of `u` steps and the update that followed.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowLog {
    /// Environment steps taken so far, including this window.
    pub step: usize,
    /// Sum of total rewards collected in the window.
    pub window_reward: f64,
    pub cumulative_reward: f64,
    pub episodes_completed: usize,
    pub stats: UpdateStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub kind: AgentKind,
    pub seed: u64,
    pub windows: Vec<WindowLog>,
    /// Undiscounted total reward of every finished episode.
    pub episode_returns: Vec<f64>,
}

impl RunLog {
    pub fn max_window_reward(&self) -> f64 {
        self.windows
            .iter()
            .map(|w| w.window_reward)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total_cumulative_reward(&self) -> f64 {
        self.windows.last().map_or(0.0, |w| w.cumulative_reward)
    }
}

/// Independent random streams derived from one run seed.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Alternates collection windows with updates.
pub struct Trainer<E> {
    env: E,
    agent: Agent,
    obs: ObsVec,
    sample_rng: ChaCha8Rng,
    update_rng: ChaCha8Rng,
    episode_rng: ChaCha8Rng,
    steps: usize,
    episode_return: f64,
    log: RunLog,
}

impl<E: PostDecisionEnv> Trainer<E> {
    pub fn new(kind: AgentKind, mut env: E, cfg: AgentConfig, seed: u64) -> Result<Self> {
        let mut init_rng = stream(seed, 1);
        let agent = Agent::new(kind, cfg, env.obs_dim(), &env.action_spec(), &mut init_rng)?;
        let mut episode_rng = stream(seed, 4);
        let obs = env.reset(episode_rng.next_u64());
        Ok(Self {
            env,
            agent,
            obs,
            sample_rng: stream(seed, 2),
            update_rng: stream(seed, 3),
            episode_rng,
            steps: 0,
            episode_return: 0.0,
            log: RunLog {
                kind,
                seed,
                windows: Vec::new(),
                episode_returns: Vec::new(),
            },
        })
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_parts(self) -> (RunLog, Agent, E) {
        (self.log, self.agent, self.env)
    }

    /// Runs the old policy for one window of `u` steps, resetting after each episode.
    pub fn collect(&mut self) -> Result<Vec<Transition>> {
        let u = self.agent.config().window;
        let mut buffer = Vec::with_capacity(u);
        for _ in 0..u {
            let (action, logp, _) = self.agent.act(&self.obs, &mut self.sample_rng)?;
            let (post_obs, det_reward) = self.env.step_deterministic(&action)?;
            let (next_obs, stoch_reward, done) = self.env.step_stochastic()?;
            let total_reward = det_reward + stoch_reward;
            buffer.push(Transition {
                obs: std::mem::replace(&mut self.obs, next_obs),
                action,
                logp_old: logp,
                det_reward,
                post_obs,
                total_reward,
                done,
            });
            self.steps += 1;
            self.episode_return += total_reward;
            if done {
                self.log.episode_returns.push(self.episode_return);
                self.episode_return = 0.0;
                self.obs = self.env.reset(self.episode_rng.next_u64());
            }
        }
        Ok(buffer)
    }

    /// One collection window followed by one update.
    pub fn run_window(&mut self) -> Result<&WindowLog> {
        let episodes_before = self.log.episode_returns.len();
        let buffer = self.collect()?;
        let window_reward: f64 = buffer.iter().map(|t| t.total_reward).sum();
        let stats = self.agent.update(buffer, &mut self.update_rng)?;
        let cumulative_reward = self.log.total_cumulative_reward() + window_reward;
        self.log.windows.push(WindowLog {
            step: self.steps,
            window_reward,
            cumulative_reward,
            episodes_completed: self.log.episode_returns.len() - episodes_before,
            stats,
        });
        Ok(self.log.windows.last().unwrap())
    }
}

/// Trains for `total_steps / u` windows. Deterministic given `seed`.
pub fn train<E: PostDecisionEnv>(
    kind: AgentKind,
    env: E,
    cfg: AgentConfig,
    total_steps: usize,
    seed: u64,
) -> Result<(RunLog, Agent)> {
    if total_steps < cfg.window {
        return Err(Error::Config(format!(
            "total_steps ({total_steps}) must be at least one window ({})",
            cfg.window
        )));
    }
    let windows = total_steps / cfg.window;
    let mut trainer = Trainer::new(kind, env, cfg, seed)?;
    for _ in 0..windows {
        trainer.run_window()?;
    }
    let (log, agent, _) = trainer.into_parts();
    Ok((log, agent))
}
