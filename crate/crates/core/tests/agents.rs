mod common;

use pdppo::agents::{
    compute_advantages, discounted_returns, train, Agent, AgentConfig, AgentKind, Critics, Trainer, Trajectory,
    Transition,
};
use pdppo::env::bandit::TwoArmBandit;
use pdppo::env::frozenlake::{FrozenLake, FrozenLakeConfig};
use pdppo::env::{Action, ActionSpec, ObsVec, PostDecisionEnv, PreStream};
use pdppo::nn::{Activation, Head, MlpNet, OptimizerKind};
use pdppo::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_cfg() -> AgentConfig {
    AgentConfig {
        window: 40,
        epochs: 3,
        minibatch_size: Some(10),
        hidden: vec![8],
        ..AgentConfig::frozen_lake()
    }
}

fn small_lake() -> FrozenLake {
    let cfg = FrozenLakeConfig {
        n: 4,
        m: 4,
        hole_prob: 0.2,
        ..FrozenLakeConfig::default()
    };
    FrozenLake::new(cfg, 3).unwrap()
}

fn buffer(agent: &Agent, env: &mut impl PostDecisionEnv, n: usize, seed: u64) -> Vec<Transition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = env.reset(seed);
    (0..n)
        .map(|_| {
            let (action, logp, _) = agent.act(&obs, &mut rng).unwrap();
            let out = env.step(&action).unwrap();
            let t = Transition {
                obs: obs.clone(),
                action,
                logp_old: logp,
                det_reward: out.det_reward,
                post_obs: out.post_obs,
                total_reward: out.total_reward,
                done: out.done,
            };
            obs = if out.done { env.reset(rng.random()) } else { out.next_obs };
            t
        })
        .collect()
}

fn new_agent(kind: AgentKind, cfg: AgentConfig, seed: u64) -> (Agent, FrozenLake) {
    let env = small_lake();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agent = Agent::new(kind, cfg, env.obs_dim(), &env.action_spec(), &mut rng).unwrap();
    (agent, env)
}

#[test]
fn zero_epochs_leave_parameters_and_sync_old_policy() {
    let cfg = AgentConfig {
        epochs: 0,
        ..small_cfg()
    };
    for kind in [AgentKind::Ppo, AgentKind::Pdppo, AgentKind::Pdppo1c] {
        let (mut agent, mut env) = new_agent(kind, cfg.clone(), 1);
        let before = agent.actor().params_flat();
        let critic_before = agent.critic().map(|c| c.params_flat());
        let buf = buffer(&agent, &mut env, cfg.window, 2);
        let stats = agent.update(buf, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(agent.actor().params_flat(), before);
        assert_eq!(agent.actor_old().params_flat(), before);
        assert_eq!(agent.critic().map(|c| c.params_flat()), critic_before);
        assert_eq!((stats.minibatches, stats.mean_ratio), (0, 1.0));
    }
}

#[test]
fn first_minibatch_ratios_are_one_and_old_policy_syncs() {
    for kind in [AgentKind::Ppo, AgentKind::Pdppo, AgentKind::Pdppo1c] {
        let (mut agent, mut env) = new_agent(kind, small_cfg(), 4);
        for round in 0..3 {
            let buf = buffer(&agent, &mut env, 40, round);
            let stats = agent.update(buf, &mut ChaCha8Rng::seed_from_u64(round)).unwrap();
            assert!(stats.first_minibatch_ratio_dev <= 1e-9, "{kind}: {}", stats.first_minibatch_ratio_dev);
            assert!(stats.min_clipped_ratio >= 0.8 && stats.max_clipped_ratio <= 1.2);
            assert_eq!(agent.actor_old().params_flat(), agent.actor().params_flat());
        }
    }
}

#[test]
fn update_rejects_wrong_buffer_size() {
    let (mut agent, mut env) = new_agent(AgentKind::Pdppo, small_cfg(), 0);
    let buf = buffer(&agent, &mut env, 39, 0);
    assert!(matches!(agent.update(buf, &mut ChaCha8Rng::seed_from_u64(0)), Err(Error::State(_))));
}

#[test]
fn ppo_ignores_post_decision_fields() {
    let (agent, mut env) = new_agent(AgentKind::Ppo, small_cfg(), 5);
    let buf = buffer(&agent, &mut env, 40, 9);
    let mut scrambled = buf.clone();
    for t in &mut scrambled {
        t.det_reward = 123.0;
        t.post_obs = ObsVec::new(vec![0.5; t.post_obs.len()]).unwrap();
    }
    let (mut a, _) = new_agent(AgentKind::Ppo, small_cfg(), 5);
    let (mut b, _) = new_agent(AgentKind::Ppo, small_cfg(), 5);
    a.update(buf, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    b.update(scrambled, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(a.actor().params_flat(), b.actor().params_flat());
    assert_eq!(a.critic().unwrap().params_flat(), b.critic().unwrap().params_flat());
}

#[test]
fn critics_are_wired_by_kind() {
    for (kind, pre, post) in [
        (AgentKind::Ppo, true, false),
        (AgentKind::Pdppo, true, true),
        (AgentKind::Pdppo1c, false, true),
    ] {
        let (agent, _) = new_agent(kind, small_cfg(), 0);
        assert_eq!(agent.critic().is_some(), pre);
        assert_eq!(agent.post_critic().is_some(), post);
    }
}

#[test]
fn one_window_means_one_update_and_runs_repeat() {
    let cfg = small_cfg();
    let (log, _) = train(AgentKind::Pdppo, small_lake(), cfg.clone(), 40, 11).unwrap();
    assert_eq!(log.windows.len(), 1);
    let (again, _) = train(AgentKind::Pdppo, small_lake(), cfg.clone(), 40, 11).unwrap();
    assert_eq!(log, again);

    let (a, agent_a) = train(AgentKind::Pdppo1c, small_lake(), cfg.clone(), 200, 3).unwrap();
    let (b, agent_b) = train(AgentKind::Pdppo1c, small_lake(), cfg.clone(), 200, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(agent_a.actor().params_flat(), agent_b.actor().params_flat());
    let (c, _) = train(AgentKind::Pdppo1c, small_lake(), cfg.clone(), 200, 4).unwrap();
    assert_ne!(a, c);

    assert!(matches!(train(AgentKind::Ppo, small_lake(), cfg, 39, 0), Err(Error::Config(_))));
}

#[test]
fn window_log_is_consistent() {
    let (log, _) = train(AgentKind::Pdppo, small_lake(), small_cfg(), 200, 8).unwrap();
    assert_eq!(log.windows.len(), 5);
    let mut running = 0.0;
    for (k, w) in log.windows.iter().enumerate() {
        running += w.window_reward;
        assert_eq!(w.step, (k + 1) * 40);
        assert!((w.cumulative_reward - running).abs() < 1e-9);
    }
    let best = log.windows.iter().map(|w| w.window_reward).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(log.max_window_reward(), best);
    let episodes: usize = log.windows.iter().map(|w| w.episodes_completed).sum();
    assert_eq!(episodes, log.episode_returns.len());
}

/// Entropy of the actor averaged over the batch observations.
fn mean_entropy(agent: &Agent, batch: &[Transition]) -> f64 {
    batch
        .iter()
        .map(|t| {
            agent.probabilities(&t.obs).unwrap()[0]
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|p| -p * p.ln())
                .sum::<f64>()
        })
        .sum::<f64>()
        / batch.len() as f64
}

#[test]
fn larger_entropy_coefficient_never_lowers_entropy() {
    let base = AgentConfig {
        epochs: 1,
        minibatch_size: Some(40),
        optimizer: OptimizerKind::Sgd,
        lr_actor: 1e-3,
        grad_max_norm: 1e9,
        ..small_cfg()
    };
    for seed in 0..10 {
        let (probe, mut env) = new_agent(AgentKind::Pdppo, base.clone(), seed);
        let batch = buffer(&probe, &mut env, 40, seed);
        let mut last = f64::NEG_INFINITY;
        for c1 in [0.0, 0.01, 0.1, 1.0, 10.0] {
            let cfg = AgentConfig {
                entropy_coef: c1,
                ..base.clone()
            };
            let (mut agent, _) = new_agent(AgentKind::Pdppo, cfg, seed);
            agent.update(batch.clone(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            let h = mean_entropy(&agent, &batch);
            assert!(h >= last, "seed {seed}: entropy {h} after c1 = {c1} is below {last}");
            last = h;
        }
    }
}

#[test]
fn bandit_step_raises_rewarding_arm() {
    let cfg = AgentConfig {
        window: 64,
        epochs: 1,
        minibatch_size: Some(64),
        ..AgentConfig::frozen_lake()
    };
    let probe = TwoArmBandit::new([1.0, 0.0]).reset(0);
    let mut raised = 0;
    for seed in 0..50 {
        let mut trainer = Trainer::new(AgentKind::Pdppo, TwoArmBandit::new([1.0, 0.0]), cfg.clone(), seed).unwrap();
        let before = trainer.agent().probabilities(&probe).unwrap()[0][0];
        trainer.run_window().unwrap();
        let after = trainer.agent().probabilities(&probe).unwrap()[0][0];
        raised += usize::from(after > before);
    }
    assert!(raised >= 45, "rewarding arm rose in {raised}/50 seeds");
}

fn random_transitions<R: Rng>(rng: &mut R, len: usize, dim: usize, post_equals_pre: bool) -> Vec<Transition> {
    (0..len)
        .map(|_| {
            let obs = ObsVec::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let post_obs = if post_equals_pre {
                obs.clone()
            } else {
                ObsVec::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
            };
            let det = rng.random_range(-1.0..1.0);
            Transition {
                obs,
                action: Action::discrete(0),
                logp_old: -0.5,
                det_reward: det,
                post_obs,
                total_reward: det + rng.random_range(-1.0..1.0),
                done: rng.random_bool(0.2),
            }
        })
        .collect()
}

#[test]
fn identical_streams_and_critics_reduce_to_ppo() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let critic = MlpNet::new(&[3, 6, 1], Activation::Tanh, Head::Linear, &mut rng).unwrap();
        let twin = critic.clone();
        let transitions = random_transitions(&mut rng, 30, 3, true);
        let mut dual = Trajectory::new(transitions.clone());
        dual.compute_returns(AgentKind::Pdppo, 0.9, PreStream::Total, 1.0);
        compute_advantages(&mut dual, Critics::Dual { pre: &critic, post: &twin }, true).unwrap();
        let mut ppo = Trajectory::new(transitions);
        ppo.compute_returns(AgentKind::Ppo, 0.9, PreStream::DeterministicOnly, 1.0);
        compute_advantages(&mut ppo, Critics::Pre(&critic), true).unwrap();
        assert_eq!(dual.adv_pre, dual.adv_post);
        assert_eq!(dual.advantages, ppo.advantages);
    }
}

#[test]
fn zero_critics_give_returns_as_advantages() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let zero = MlpNet::zeros(&[4, 5, 1], Activation::Tanh, Head::Linear).unwrap();
    let transitions = random_transitions(&mut rng, 25, 4, false);
    let mut traj = Trajectory::new(transitions.clone());
    traj.compute_returns(AgentKind::Pdppo, 0.95, PreStream::DeterministicOnly, 1.0);
    compute_advantages(&mut traj, Critics::Dual { pre: &zero, post: &zero }, false).unwrap();
    let dones: Vec<bool> = transitions.iter().map(|t| t.done).collect();
    let det: Vec<f64> = transitions.iter().map(|t| t.det_reward).collect();
    let total: Vec<f64> = transitions.iter().map(|t| t.total_reward).collect();
    assert_eq!(traj.adv_pre.unwrap(), discounted_returns(&det, &dones, 0.95));
    assert_eq!(traj.adv_post.as_ref(), traj.returns_post.as_ref());
    for (a, b) in traj.adv_post.unwrap().iter().zip(common::brute_force_returns(&total, &dones, 0.95)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn advantages_need_returns() {
    let zero = MlpNet::zeros(&[2, 1], Activation::Tanh, Head::Linear).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut traj = Trajectory::new(random_transitions(&mut rng, 5, 2, false));
    assert!(matches!(compute_advantages(&mut traj, Critics::Post(&zero), true), Err(Error::State(_))));
}

#[test]
fn multi_discrete_agent_acts_in_range() {
    let spec = ActionSpec::MultiDiscrete(vec![3, 5]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let agent = Agent::new(AgentKind::Pdppo, small_cfg(), 6, &spec, &mut rng).unwrap();
    let obs = ObsVec::new(vec![0.1; 6]).unwrap();
    for _ in 0..100 {
        let (a, logp, h) = agent.act(&obs, &mut rng).unwrap();
        spec.validate(&a).unwrap();
        assert!(logp <= 0.0 && h > 0.0 && h <= 3f64.ln() + 5f64.ln() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selected_advantage_dominates_both(seed in any::<u64>(), len in 1usize..40, normalize in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pre = MlpNet::new(&[3, 4, 1], Activation::Relu, Head::Linear, &mut rng).unwrap();
        let post = MlpNet::new(&[3, 4, 1], Activation::Tanh, Head::Linear, &mut rng).unwrap();
        let mut traj = Trajectory::new(random_transitions(&mut rng, len, 3, false));
        traj.compute_returns(AgentKind::Pdppo, 0.9, PreStream::DeterministicOnly, 1.0);
        compute_advantages(&mut traj, Critics::Dual { pre: &pre, post: &post }, normalize).unwrap();
        let raw = traj.advantages_raw.unwrap();
        for t in 0..len {
            prop_assert!(raw[t] >= traj.adv_pre.as_ref().unwrap()[t]);
            prop_assert!(raw[t] >= traj.adv_post.as_ref().unwrap()[t]);
        }
        let adv = traj.advantages.unwrap();
        prop_assert_eq!(adv.len(), len);
        if normalize && len > 1 {
            let mean = adv.iter().sum::<f64>() / len as f64;
            prop_assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn returns_match_brute_force(
        rewards in proptest::collection::vec(-10.0f64..10.0, 1..50),
        done_bits in any::<u64>(),
        gamma in prop_oneof![Just(0.0), Just(0.5), Just(0.9), Just(1.0), 0.0f64..1.0],
    ) {
        let dones: Vec<bool> = (0..rewards.len()).map(|i| done_bits >> (i % 64) & 1 == 1).collect();
        let got = discounted_returns(&rewards, &dones, gamma);
        let want = common::brute_force_returns(&rewards, &dones, gamma);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
