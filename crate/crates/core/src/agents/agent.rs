use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::advantage::stack;
use super::loss::{clip_ratio, clipped_surrogate, importance_ratio, mse};
use super::policy::{self, evaluate_with_grad};
use super::{compute_advantages, AgentConfig, AgentKind, Critics, Trajectory, Transition};
use crate::env::{Action, ActionSpec, ObsVec};
use crate::error::{Error, Result};
use crate::nn::{ForwardCache, GradientTape, Head, MlpNet, Optimizer};

/// Aggregates over one call to [`Agent::update`]. Losses are minibatch means.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub post_critic_loss: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub min_clipped_ratio: f64,
    pub max_clipped_ratio: f64,
    /// Largest `|ρ − 1|` in the first minibatch of the first epoch.
    pub first_minibatch_ratio_dev: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
}

struct Critic {
    net: MlpNet,
    opt: Optimizer,
}

impl Critic {
    /// Forward pass and MSE against `targets`, keeping the cache for [`Critic::step`].
    fn evaluate(&self, obs: &Array2<f64>, targets: &[f64]) -> Result<(f64, Array2<f64>, ForwardCache)> {
        let (values, cache) = self.net.forward_cached(obs.view())?;
        let loss = mse(values.column(0).iter().copied(), targets);
        Ok((loss, values, cache))
    }

    /// One optimizer step on the MSE loss, gradient clipped to `max_norm`.
    fn step(&mut self, values: Array2<f64>, cache: &ForwardCache, targets: &[f64], max_norm: f64) -> Result<()> {
        let n = targets.len() as f64;
        let mut grad = values;
        grad.column_mut(0)
            .iter_mut()
            .zip(targets)
            .for_each(|(v, r)| *v = 2.0 * (*v - r) / n);
        let mut tape = GradientTape::for_net(&self.net);
        self.net.backward(cache, grad.view(), &mut tape)?;
        tape.clip_global_norm(max_norm);
        self.opt.apply(&mut self.net, &tape)
    }
}

/// Actor with its old-policy snapshot plus whichever critics the kind needs,
/// each with its own optimizer.
pub struct Agent {
    kind: AgentKind,
    cfg: AgentConfig,
    arities: Vec<usize>,
    actor: MlpNet,
    actor_old: MlpNet,
    actor_opt: Optimizer,
    critic: Option<Critic>,
    post_critic: Option<Critic>,
}

impl Agent {
    /// Randomly initialized networks. The actor and both critics are always
    /// drawn, in that order, so a seed yields the same actor for every kind.
    pub fn new<R: Rng + ?Sized>(
        kind: AgentKind,
        cfg: AgentConfig,
        obs_dim: usize,
        action_spec: &ActionSpec,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend(&cfg.hidden);
            s.push(output);
            s
        };
        let actor = MlpNet::new(&sizes(obs_dim, action_spec.total_logits()), cfg.activation, Head::Linear, rng)?;
        let critic = MlpNet::new(&sizes(obs_dim, 1), cfg.activation, Head::Linear, rng)?;
        let post_critic = MlpNet::new(&sizes(obs_dim, 1), cfg.activation, Head::Linear, rng)?;
        Self::from_networks(
            kind,
            cfg,
            action_spec,
            actor,
            kind.uses_pre_critic().then_some(critic),
            kind.uses_post_critic().then_some(post_critic),
        )
    }

    pub fn from_networks(
        kind: AgentKind,
        cfg: AgentConfig,
        action_spec: &ActionSpec,
        actor: MlpNet,
        critic: Option<MlpNet>,
        post_critic: Option<MlpNet>,
    ) -> Result<Self> {
        cfg.validate()?;
        if critic.is_some() != kind.uses_pre_critic() || post_critic.is_some() != kind.uses_post_critic() {
            return Err(Error::Structure(format!("critic set does not match agent kind {kind}")));
        }
        if actor.output_dim() != action_spec.total_logits() || actor.head() != Head::Linear {
            return Err(Error::Structure(
                "actor must have a linear head with one logit per action choice".into(),
            ));
        }
        for c in critic.iter().chain(&post_critic) {
            if c.output_dim() != 1 {
                return Err(Error::Structure("critics must output a single value".into()));
            }
        }
        let wrap = |net: MlpNet| -> Result<Critic> {
            Ok(Critic {
                net,
                opt: Optimizer::new(cfg.optimizer, cfg.lr_critic)?,
            })
        };
        Ok(Self {
            kind,
            arities: action_spec.arities(),
            actor_old: actor.clone(),
            actor,
            actor_opt: Optimizer::new(cfg.optimizer, cfg.lr_actor)?,
            critic: critic.map(wrap).transpose()?,
            post_critic: post_critic.map(wrap).transpose()?,
            cfg,
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn actor(&self) -> &MlpNet {
        &self.actor
    }

    pub fn actor_old(&self) -> &MlpNet {
        &self.actor_old
    }

    pub fn critic(&self) -> Option<&MlpNet> {
        self.critic.as_ref().map(|c| &c.net)
    }

    pub fn post_critic(&self) -> Option<&MlpNet> {
        self.post_critic.as_ref().map(|c| &c.net)
    }

    /// Samples from the old policy, which is what the collected log-probs refer to.
    pub fn act<R: Rng + ?Sized>(&self, obs: &ObsVec, rng: &mut R) -> Result<(Action, f64, f64)> {
        policy::sample_action(&self.actor_old, obs, &self.arities, rng)
    }

    pub fn greedy(&self, obs: &ObsVec) -> Result<Action> {
        policy::greedy_action(&self.actor, obs, &self.arities)
    }

    pub fn probabilities(&self, obs: &ObsVec) -> Result<Vec<Vec<f64>>> {
        policy::probabilities(&self.actor, obs, &self.arities)
    }

    pub fn critics(&self) -> Critics<'_> {
        match (&self.critic, &self.post_critic) {
            (Some(c), Some(p)) => Critics::Dual { pre: &c.net, post: &p.net },
            (Some(c), None) => Critics::Pre(&c.net),
            (None, Some(p)) => Critics::Post(&p.net),
            (None, None) => unreachable!("every agent kind has a critic"),
        }
    }

    /// Returns and advantages of `buffer` under the current critics.
    pub fn prepare(&self, buffer: Vec<Transition>) -> Result<Trajectory> {
        let mut traj = Trajectory::new(buffer);
        traj.compute_returns(self.kind, self.cfg.gamma, self.cfg.pre_stream, self.cfg.reward_scale);
        compute_advantages(&mut traj, self.critics(), self.cfg.advantage_normalize)?;
        Ok(traj)
    }

    /// K epochs of shuffled minibatch updates over one window, then syncs the old policy.
    pub fn update<R: Rng + ?Sized>(&mut self, buffer: Vec<Transition>, rng: &mut R) -> Result<UpdateStats> {
        if buffer.len() != self.cfg.window {
            return Err(Error::State(format!(
                "update expects exactly {} transitions, got {}",
                self.cfg.window,
                buffer.len()
            )));
        }
        let traj = self.prepare(buffer)?;
        let stats = self.optimize(&traj, rng)?;
        self.actor_old = self.actor.clone();
        Ok(stats)
    }

    fn optimize<R: Rng + ?Sized>(&mut self, traj: &Trajectory, rng: &mut R) -> Result<UpdateStats> {
        let n = traj.len();
        let obs = traj.obs_matrix();
        let post_obs = stack(traj.transitions.iter().map(|t| &t.post_obs));
        let advantages = traj.advantages.as_ref().expect("prepared trajectory");
        let returns_pre = traj.returns_pre.as_ref().expect("prepared trajectory");
        let returns_post = traj.returns_post.as_ref().expect("prepared trajectory");
        let mb = self.cfg.effective_minibatch();
        let eps = self.cfg.clip_eps;

        let mut stats = UpdateStats {
            min_ratio: f64::INFINITY,
            max_ratio: f64::NEG_INFINITY,
            min_clipped_ratio: f64::INFINITY,
            max_clipped_ratio: f64::NEG_INFINITY,
            ..Default::default()
        };
        let mut ratio_sum = 0.0;
        let mut ratio_count = 0usize;
        let mut clipped_count = 0usize;
        let mut indices: Vec<usize> = (0..n).collect();

        for epoch in 0..self.cfg.epochs {
            indices.shuffle(rng);
            for (chunk_idx, chunk) in indices.chunks(mb).enumerate() {
                let b = chunk.len();
                let pick = |v: &[f64]| -> Vec<f64> { chunk.iter().map(|&i| v[i]).collect() };
                let obs_b = obs.select(Axis(0), chunk);

                // Critic losses first so the actor loss can report them.
                let pre_eval = match &self.critic {
                    Some(c) => {
                        let targets = pick(returns_pre);
                        let (loss, values, cache) = c.evaluate(&obs_b, &targets)?;
                        Some((loss, values, cache, targets))
                    }
                    None => None,
                };
                let post_eval = match &self.post_critic {
                    Some(c) => {
                        let targets = pick(returns_post);
                        let (loss, values, cache) = c.evaluate(&post_obs.select(Axis(0), chunk), &targets)?;
                        Some((loss, values, cache, targets))
                    }
                    None => None,
                };
                let critic_terms: Vec<f64> =
                    pre_eval.iter().chain(&post_eval).map(|e| e.0).collect();

                // Actor.
                let (logits, cache) = self.actor.forward_cached(obs_b.view())?;
                let mut grad = Array2::zeros(logits.dim());
                let mut ratios = Vec::with_capacity(b);
                let mut entropies = Vec::with_capacity(b);
                let adv_b = pick(advantages);
                for (row, &i) in chunk.iter().enumerate() {
                    let t = &traj.transitions[i];
                    let (logp_probe, _) =
                        policy::evaluate(logits.row(row), &self.arities, t.action.components());
                    let ratio = importance_ratio(logp_probe, t.logp_old);
                    let (_, unclipped_active) = clipped_surrogate(ratio, adv_b[row], eps);
                    // d/dlogp of −min(ρA, clip(ρ)A) is −ρA on the unclipped branch, else 0.
                    let dlogp = if unclipped_active { -ratio * adv_b[row] / b as f64 } else { 0.0 };
                    let dent = -self.cfg.entropy_coef / b as f64;
                    let (_, h) = evaluate_with_grad(
                        logits.row(row),
                        &self.arities,
                        t.action.components(),
                        dlogp,
                        dent,
                        grad.row_mut(row),
                    );
                    ratios.push(ratio);
                    entropies.push(h);

                    let clipped = clip_ratio(ratio, eps);
                    stats.min_ratio = stats.min_ratio.min(ratio);
                    stats.max_ratio = stats.max_ratio.max(ratio);
                    stats.min_clipped_ratio = stats.min_clipped_ratio.min(clipped);
                    stats.max_clipped_ratio = stats.max_clipped_ratio.max(clipped);
                    clipped_count += usize::from(clipped != ratio);
                    if epoch == 0 && chunk_idx == 0 {
                        stats.first_minibatch_ratio_dev = stats.first_minibatch_ratio_dev.max((ratio - 1.0).abs());
                    }
                }
                ratio_sum += ratios.iter().sum::<f64>();
                ratio_count += b;
                let loss = super::actor_loss(
                    &ratios,
                    &adv_b,
                    &entropies,
                    &critic_terms,
                    eps,
                    self.cfg.entropy_coef,
                    self.cfg.value_coef,
                );
                let mut tape = GradientTape::for_net(&self.actor);
                self.actor.backward(&cache, grad.view(), &mut tape)?;
                tape.clip_global_norm(self.cfg.grad_max_norm);
                self.actor_opt.apply(&mut self.actor, &tape)?;

                // Critics, each with its own optimizer.
                if let (Some(c), Some((loss, values, cache, targets))) = (&mut self.critic, pre_eval) {
                    c.step(values, &cache, &targets, self.cfg.grad_max_norm)?;
                    stats.critic_loss += loss;
                }
                if let (Some(c), Some((loss, values, cache, targets))) = (&mut self.post_critic, post_eval) {
                    c.step(values, &cache, &targets, self.cfg.grad_max_norm)?;
                    stats.post_critic_loss += loss;
                }

                stats.actor_loss += loss;
                stats.entropy += entropies.iter().sum::<f64>() / b as f64;
                stats.minibatches += 1;
            }
        }

        if stats.minibatches > 0 {
            let m = stats.minibatches as f64;
            stats.actor_loss /= m;
            stats.critic_loss /= m;
            stats.post_critic_loss /= m;
            stats.entropy /= m;
            stats.mean_ratio = ratio_sum / ratio_count as f64;
            stats.clip_fraction = clipped_count as f64 / ratio_count as f64;
        } else {
            stats.mean_ratio = 1.0;
            stats.min_ratio = 1.0;
            stats.max_ratio = 1.0;
            stats.min_clipped_ratio = 1.0;
            stats.max_clipped_ratio = 1.0;
        }
        Ok(stats)
    }
}
