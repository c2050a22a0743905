//! Randomized invariant suites for the environments, run by `pdppo env-check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::frozenlake::{move_deterministic, Cell, FrozenLake, FrozenLakeConfig, Move};
use crate::env::lotsizing::{InstanceSpec, LotSizing, LotSizingParams, LotSizingState};
use crate::env::{Action, PostDecisionEnv};
use crate::error::{Error, Result};
use crate::harness::EnvKind;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

pub fn run_checks(kind: EnvKind, trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    match kind {
        EnvKind::FrozenLake => frozenlake_checks(trials, seed),
        EnvKind::LotSizing => lotsizing_checks(trials, seed),
    }
}

/// Random grids and random actions, one step per trial, plus a slip histogram.
pub fn frozenlake_checks(trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = [0usize; 6];
    let mut first = vec![String::new(); 6];
    let mut fail = |k: usize, msg: String| {
        if failures[k] == 0 {
            first[k] = msg;
        }
        failures[k] += 1;
    };

    for trial in 0..trials {
        let cfg = FrozenLakeConfig {
            n: rng.random_range(2..=10),
            m: rng.random_range(2..=10),
            hole_prob: rng.random_range(0.0..=1.0),
            ..FrozenLakeConfig::default()
        };
        let cells = cfg.n * cfg.m;
        let mut env = FrozenLake::new(cfg.clone(), rng.random())?;
        let grid = env.grid().clone();

        let starts = (0..cfg.n).flat_map(|r| (0..cfg.m).map(move |c| (r, c)));
        let (mut n_start, mut n_goal) = (0, 0);
        for p in starts {
            match grid.cell(p) {
                Cell::Start => n_start += 1,
                Cell::Goal => n_goal += 1,
                _ => {}
            }
        }
        if n_start != 1 || n_goal != 1 || grid.cell((0, 0)) != Cell::Start || grid.cell((cfg.n - 1, cfg.m - 1)) != Cell::Goal {
            fail(0, format!("trial {trial}: bad start/goal layout"));
        }

        let obs = env.reset(rng.random());
        let v = obs.as_slice();
        let mask_ok = (0..cells).all(|i| (v[cells + i] == 1.0) == (grid.cell((i / cfg.m, i % cfg.m)) == Cell::Hole));
        if v.len() != 2 * cells || v[..cells].iter().sum::<f64>() != 1.0 || v[0] != 1.0 || !mask_ok {
            fail(1, format!("trial {trial}: bad observation encoding"));
        }

        // random non-terminal pre-decision cell
        let eligible: Vec<(usize, usize)> = (0..cells)
            .map(|i| (i / cfg.m, i % cfg.m))
            .filter(|&p| !grid.landing(p).1)
            .collect();
        let pos = eligible[rng.random_range(0..eligible.len())];
        env.set_position(pos);
        let a = rng.random_range(0..4);
        let (post_obs, det) = env.step_deterministic(&Action::discrete(a))?;
        let expected = move_deterministic(&grid, pos, Move::from_index(a)?);
        let (dr, dc) = (pos.0.abs_diff(env.position().0), pos.1.abs_diff(env.position().1));
        if env.position() != expected || dr + dc > 1 || post_obs.as_slice()[expected.0 * cfg.m + expected.1] != 1.0 {
            fail(2, format!("trial {trial}: move {a} from {pos:?} gave {:?}", env.position()));
        }

        let (_, stoch, done) = env.step_stochastic()?;
        let land = env.position();
        let near = land.0.abs_diff(expected.0) + land.1.abs_diff(expected.1) <= 1;
        let post_terminal = grid.landing(expected).1;
        if !near || (post_terminal && land != expected) {
            fail(3, format!("trial {trial}: slip from {expected:?} landed on {land:?}"));
        }

        let hole = -1.0 / cells as f64;
        let (want_reward, want_done) = if post_terminal {
            (grid.landing(expected).0, true)
        } else {
            grid.landing(land)
        };
        let total = det + stoch;
        let allowed = total == 0.0 || total == 1.0 || total == hole;
        if !allowed || total != want_reward || done != want_done || (post_terminal && stoch != 0.0) {
            fail(4, format!("trial {trial}: reward {total} done {done}, expected {want_reward} {want_done}"));
        }

        env.set_position(pos);
        if env.step_stochastic().is_ok() {
            fail(5, format!("trial {trial}: stochastic phase accepted before a decision"));
        }
    }

    let mut results: Vec<CheckResult> = [
        "grid layout",
        "observation encoding",
        "deterministic move",
        "slip adjacency",
        "reward and termination",
        "phase ordering",
    ]
    .iter()
    .enumerate()
    .map(|(k, name)| {
        let detail = if failures[k] == 0 {
            format!("{trials} trials")
        } else {
            format!("{} failures, first: {}", failures[k], first[k])
        };
        CheckResult::new(name, failures[k] == 0, detail)
    })
    .collect();

    results.push(slip_histogram(&mut rng, 100_000.max(trials))?);
    Ok(results)
}

fn slip_histogram(rng: &mut ChaCha8Rng, samples: usize) -> Result<CheckResult> {
    let cfg = FrozenLakeConfig {
        n: 5,
        m: 5,
        hole_prob: 0.0,
        ..FrozenLakeConfig::default()
    };
    let p_slip = cfg.p_slip;
    let mut env = FrozenLake::new(cfg, 0)?;
    env.reset(rng.random());
    let centre = (2, 2);
    let mut counts = [0usize; 5];
    for _ in 0..samples {
        env.set_post_decision(centre);
        env.step_stochastic()?;
        let p = env.position();
        let k = match (p.0 as i64 - 2, p.1 as i64 - 2) {
            (0, 0) => 0,
            (-1, 0) => 1,
            (1, 0) => 2,
            (0, -1) => 3,
            (0, 1) => 4,
            _ => return Ok(CheckResult::new("slip distribution", false, format!("jumped to {p:?}"))),
        };
        counts[k] += 1;
    }
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / samples as f64).collect();
    let want = [1.0 - p_slip, p_slip / 4.0, p_slip / 4.0, p_slip / 4.0, p_slip / 4.0];
    let worst = freq.iter().zip(&want).map(|(f, w)| (f - w).abs()).fold(0.0, f64::max);
    Ok(CheckResult::new(
        "slip distribution",
        worst < 0.01,
        format!(
            "{samples} samples, stay {:.4}, neighbours {:.4} {:.4} {:.4} {:.4}, max |Δ| {worst:.4}",
            freq[0], freq[1], freq[2], freq[3], freq[4]
        ),
    ))
}

/// Step cost recomputed directly from the cost definition: setups, then
/// capped production, then holding and lost sales against `demand`.
/// Returns (cost, next inventory).
pub fn lotsizing_cost_oracle(
    params: &LotSizingParams,
    state: &LotSizingState,
    assignment: &[Option<usize>],
    demand: &[f64],
) -> (f64, Vec<f64>) {
    let mut cost = 0.0;
    let mut stock = state.inventory.clone();
    for j in 0..assignment.len() {
        if let Some(i) = assignment[j] {
            let delta = if state.machine_config[j] == Some(i) { 0.0 } else { 1.0 };
            cost += params.setup_cost[i] * delta;
            stock[i] += params.capacity[i][j] - params.setup_loss[i][j] * delta;
        }
    }
    let mut next = Vec::new();
    for i in 0..stock.len() {
        let s = if stock[i] > params.i_max { params.i_max } else { stock[i] };
        let left = if s > demand[i] { s - demand[i] } else { 0.0 };
        let short = if demand[i] > s { demand[i] - s } else { 0.0 };
        cost += params.holding_cost[i] * left + params.lost_sale_cost[i] * short;
        next.push(left);
    }
    (cost, next)
}

fn random_assignment<R: Rng>(params: &LotSizingParams, rng: &mut R) -> Vec<Option<usize>> {
    params
        .compat
        .iter()
        .map(|items| {
            let k = rng.random_range(0..=items.len());
            (k > 0).then(|| items[k - 1])
        })
        .collect()
}

/// Random instances, states, actions and demands against the cost oracle,
/// plus full random-policy episodes for range and horizon invariants.
pub fn lotsizing_checks(trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_cost_err: f64 = 0.0;
    let mut max_inv_err: f64 = 0.0;
    let mut bad_actions = 0;
    let mut bad_obs = 0;

    for _ in 0..trials {
        let machines = rng.random_range(1..=3);
        let spec = InstanceSpec {
            items: rng.random_range(machines..=6),
            machines,
            seed: rng.random(),
            ..InstanceSpec::default()
        };
        let mut env = LotSizing::from_spec(&spec)?;
        let params = env.params().clone();
        let state = LotSizingState {
            inventory: (0..params.items()).map(|_| rng.random_range(0.0..=params.i_max)).collect(),
            machine_config: random_assignment(&params, &mut rng),
            t: rng.random_range(0..params.horizon),
        };
        let assignment = random_assignment(&params, &mut rng);
        let demand: Vec<f64> = (0..params.items()).map(|_| rng.random_range(0..=60) as f64).collect();

        env.set_state(state.clone());
        let (post_obs, det) = env.step_deterministic(&params.encode_action(&assignment)?)?;
        let (obs, stoch, _) = env.step_stochastic_with(&demand)?;
        let (cost, next) = lotsizing_cost_oracle(&params, &state, &assignment, &demand);
        max_cost_err = max_cost_err.max((det + stoch + cost).abs());
        for (a, b) in env.state().inventory.iter().zip(&next) {
            max_inv_err = max_inv_err.max((a - b).abs());
        }

        for o in [&post_obs, &obs] {
            let v = o.as_slice();
            let l = params.items();
            let blocks_ok = v[l..].chunks(l + 1).all(|b| b.iter().sum::<f64>() == 1.0);
            if v.len() != params.obs_dim() || v[..l].iter().any(|x| !(0.0..=1.0).contains(x)) || !blocks_ok {
                bad_obs += 1;
            }
        }

        // an item the machine cannot make must be rejected
        if let Some((j, item)) = (0..params.machines())
            .flat_map(|j| (0..params.items()).map(move |i| (j, i)))
            .find(|(j, i)| !params.compat[*j].contains(i))
        {
            let mut bad = vec![None; params.machines()];
            bad[j] = Some(item);
            if params.encode_action(&bad).is_ok() {
                bad_actions += 1;
            }
        }
        let arity = params.compat[0].len() + 1;
        let mut out_of_range = vec![0; params.machines()];
        out_of_range[0] = arity;
        env.set_state(state);
        if env.step_deterministic(&Action(out_of_range)).is_ok() {
            bad_actions += 1;
        }
    }

    let episodes = (trials / 100).max(3);
    let mut inv_range_ok = true;
    let mut horizon_ok = true;
    for e in 0..episodes {
        let spec = InstanceSpec {
            horizon: 50,
            seed: e as u64,
            ..InstanceSpec::default()
        };
        let mut env = LotSizing::from_spec(&spec)?;
        env.reset(rng.random());
        let arities = env.action_spec().arities();
        let mut steps = 0;
        loop {
            let a = Action(arities.iter().map(|&n| rng.random_range(0..n)).collect());
            let out = env.step(&a)?;
            steps += 1;
            if env.state().inventory.iter().any(|&x| !(0.0..=spec.i_max).contains(&x)) {
                inv_range_ok = false;
            }
            if out.done || steps > spec.horizon {
                break;
            }
        }
        horizon_ok &= steps == spec.horizon;
    }

    Ok(vec![
        CheckResult::new(
            "cost oracle",
            max_cost_err < 1e-9,
            format!("{trials} triples, max |Δ| {max_cost_err:e}"),
        ),
        CheckResult::new(
            "inventory transition",
            max_inv_err < 1e-9,
            format!("{trials} triples, max |Δ| {max_inv_err:e}"),
        ),
        CheckResult::new("observation encoding", bad_obs == 0, format!("{bad_obs} malformed")),
        CheckResult::new("invalid actions rejected", bad_actions == 0, format!("{bad_actions} accepted")),
        CheckResult::new("inventory range", inv_range_ok, format!("{episodes} random episodes")),
        CheckResult::new("episode horizon", horizon_ok, format!("{episodes} episodes end at T")),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozenlake_suite_passes() {
        for r in frozenlake_checks(300, 1).unwrap() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn lotsizing_suite_passes() {
        for r in lotsizing_checks(300, 2).unwrap() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_checks(EnvKind::LotSizing, 0, 0).is_err());
    }
}
