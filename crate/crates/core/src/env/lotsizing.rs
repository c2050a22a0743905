//! Stochastic discrete lot-sizing: parallel machines, setups, lost sales.
//!
//! Per period the deterministic phase applies setups and production
//! (setup costs are charged here), then the stochastic phase draws demand and
//! charges holding and lost-sales costs. Rewards are negated costs.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{Action, ActionSpec, ObsVec, Phase, PostDecisionEnv};
use crate::error::{Error, Result};

/// Per-item demand model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Demand {
    /// Poisson with the given mean, truncated at `4 × mean`.
    Poisson { mean: f64 },
    Constant { value: f64 },
}

impl Demand {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Demand::Poisson { mean } if mean > 0.0 => {
                let d: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
                d.min((4.0 * mean).floor())
            }
            Demand::Poisson { .. } => 0.0,
            Demand::Constant { value } => value,
        }
    }
}

/// Closed numeric range used for instance randomization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min >= 0.0 && self.min <= self.max)
        {
            return Err(Error::Config(format!(
                "range `{name}` must satisfy 0 ≤ min ≤ max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn sample_int<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let lo = self.min.ceil() as i64;
        let hi = self.max.floor() as i64;
        if hi <= lo {
            return lo as f64;
        }
        rng.random_range(lo..=hi) as f64
    }

    fn sample_real<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.max <= self.min {
            return self.min;
        }
        rng.random_range(self.min..=self.max)
    }
}

/// Recipe for a randomized instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSpec {
    pub items: usize,
    pub machines: usize,
    pub i_max: f64,
    pub horizon: usize,
    pub setup_cost: Range,
    pub holding_cost: Range,
    pub lost_sale_cost: Range,
    pub capacity: Range,
    /// Setup loss as a fraction of the capacity `p_{i,j}`.
    pub setup_loss_fraction: Range,
    pub demand_mean: Range,
    /// Probability that a machine can produce an item beyond the coverage assignment.
    pub compat_density: f64,
    pub seed: u64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            items: 5,
            machines: 2,
            i_max: 20.0,
            horizon: 400,
            setup_cost: Range::new(5.0, 20.0),
            holding_cost: Range::new(1.0, 5.0),
            lost_sale_cost: Range::new(10.0, 40.0),
            capacity: Range::new(10.0, 30.0),
            setup_loss_fraction: Range::new(0.0, 0.5),
            demand_mean: Range::new(5.0, 15.0),
            compat_density: 0.5,
            seed: 0,
        }
    }
}

/// Fully specified instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotSizingParams {
    pub setup_cost: Vec<f64>,
    pub holding_cost: Vec<f64>,
    pub lost_sale_cost: Vec<f64>,
    /// `capacity[i][j]`: units of item `i` machine `j` makes per period.
    pub capacity: Vec<Vec<f64>>,
    /// `setup_loss[i][j]`: units lost in a period where machine `j` sets up for `i`.
    pub setup_loss: Vec<Vec<f64>>,
    /// Items each machine can produce, sorted.
    pub compat: Vec<Vec<usize>>,
    pub i_max: f64,
    pub demand: Vec<Demand>,
    pub horizon: usize,
    pub initial_inventory: f64,
}

impl LotSizingParams {
    pub fn items(&self) -> usize {
        self.setup_cost.len()
    }

    pub fn machines(&self) -> usize {
        self.compat.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.items();
        let z = self.machines();
        if l == 0 {
            return Err(Error::Config("lot-sizing instance needs at least one item".into()));
        }
        if z == 0 {
            return Err(Error::Config("lot-sizing instance needs at least one machine".into()));
        }
        let per_item = [&self.holding_cost, &self.lost_sale_cost];
        if per_item.iter().any(|v| v.len() != l) || self.demand.len() != l {
            return Err(Error::Config("per-item vectors must all have length L".into()));
        }
        if self.capacity.len() != l
            || self.setup_loss.len() != l
            || self.capacity.iter().chain(&self.setup_loss).any(|r| r.len() != z)
        {
            return Err(Error::Config("capacity and setup-loss matrices must be L × Z".into()));
        }
        let costs = self
            .setup_cost
            .iter()
            .chain(&self.holding_cost)
            .chain(&self.lost_sale_cost);
        if costs.clone().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::Config("costs must be finite and nonnegative".into()));
        }
        for i in 0..l {
            for j in 0..z {
                let (p, c) = (self.capacity[i][j], self.setup_loss[i][j]);
                if !(0.0 <= c && c <= p) {
                    return Err(Error::Config(format!(
                        "need 0 ≤ c ≤ p for item {i} machine {j}, got c={c} p={p}"
                    )));
                }
            }
        }
        for (j, items) in self.compat.iter().enumerate() {
            if items.is_empty() || items.iter().any(|&i| i >= l) {
                return Err(Error::Config(format!("machine {j} has an invalid compat set")));
            }
        }
        if !(self.i_max > 0.0) {
            return Err(Error::Config("i_max must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if !(0.0..=self.i_max).contains(&self.initial_inventory) {
            return Err(Error::Config("initial inventory outside [0, i_max]".into()));
        }
        Ok(())
    }

    /// One categorical per machine: idle plus each compatible item.
    pub fn action_space(&self) -> ActionSpec {
        ActionSpec::MultiDiscrete(self.compat.iter().map(|c| c.len() + 1).collect())
    }

    pub fn obs_dim(&self) -> usize {
        self.items() + self.machines() * (self.items() + 1)
    }

    /// Maps policy indices to machine assignments; index 0 is idle.
    pub fn decode_action(&self, action: &Action) -> Result<Vec<Option<usize>>> {
        self.action_space().validate(action)?;
        Ok(action
            .0
            .iter()
            .zip(&self.compat)
            .map(|(&k, items)| if k == 0 { None } else { Some(items[k - 1]) })
            .collect())
    }

    pub fn encode_action(&self, assignment: &[Option<usize>]) -> Result<Action> {
        self.check_assignment(assignment)?;
        Ok(Action(
            assignment
                .iter()
                .zip(&self.compat)
                .map(|(a, items)| match a {
                    None => 0,
                    Some(i) => items.iter().position(|x| x == i).unwrap() + 1,
                })
                .collect(),
        ))
    }

    fn check_assignment(&self, assignment: &[Option<usize>]) -> Result<()> {
        if assignment.len() != self.machines() {
            return Err(Error::InvalidAction(format!(
                "assignment must cover {} machines, got {}",
                self.machines(),
                assignment.len()
            )));
        }
        for (j, a) in assignment.iter().enumerate() {
            if let Some(i) = a {
                if !self.compat[j].contains(i) {
                    return Err(Error::InvalidAction(format!(
                        "machine {j} cannot produce item {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Draws a randomized instance from `spec`.
pub fn make_instance<R: Rng + ?Sized>(spec: &InstanceSpec, rng: &mut R) -> Result<LotSizingParams> {
    let (l, z) = (spec.items, spec.machines);
    if z == 0 || l == 0 {
        return Err(Error::Config("instance needs at least one item and one machine".into()));
    }
    if l < z {
        return Err(Error::Config(format!(
            "cannot give each of {z} machines a distinct item with only {l} items"
        )));
    }
    if !(spec.i_max > 0.0) || spec.horizon == 0 {
        return Err(Error::Config("i_max and horizon must be positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.compat_density) {
        return Err(Error::Config("compat_density must lie in [0, 1]".into()));
    }
    spec.setup_cost.check("setup_cost")?;
    spec.holding_cost.check("holding_cost")?;
    spec.lost_sale_cost.check("lost_sale_cost")?;
    spec.capacity.check("capacity")?;
    spec.setup_loss_fraction.check("setup_loss_fraction")?;
    spec.demand_mean.check("demand_mean")?;
    if spec.setup_loss_fraction.max > 1.0 {
        return Err(Error::Config("setup_loss_fraction must not exceed 1".into()));
    }

    let setup_cost = (0..l).map(|_| spec.setup_cost.sample_int(rng)).collect();
    let holding_cost = (0..l).map(|_| spec.holding_cost.sample_int(rng)).collect();
    let lost_sale_cost = (0..l).map(|_| spec.lost_sale_cost.sample_int(rng)).collect();
    let mut capacity = vec![vec![0.0; z]; l];
    let mut setup_loss = vec![vec![0.0; z]; l];
    for i in 0..l {
        for j in 0..z {
            let p = spec.capacity.sample_int(rng);
            let frac = spec.setup_loss_fraction.sample_real(rng);
            capacity[i][j] = p;
            setup_loss[i][j] = (frac * p).floor();
        }
    }

    // Every item gets at least one machine and every machine at least one item.
    let mut order: Vec<usize> = (0..l).collect();
    order.shuffle(rng);
    let mut compat = vec![Vec::new(); z];
    for (k, &item) in order.iter().enumerate() {
        compat[k % z].push(item);
    }
    for (j, items) in compat.iter_mut().enumerate() {
        for i in 0..l {
            let extra = rng.random_bool(spec.compat_density);
            if extra && !items.contains(&i) {
                items.push(i);
            }
        }
        items.sort_unstable();
        debug_assert!(!items.is_empty(), "machine {j} left empty");
    }

    let demand = (0..l)
        .map(|_| Demand::Poisson {
            mean: spec.demand_mean.sample_real(rng),
        })
        .collect();
    let params = LotSizingParams {
        setup_cost,
        holding_cost,
        lost_sale_cost,
        capacity,
        setup_loss,
        compat,
        i_max: spec.i_max,
        demand,
        horizon: spec.horizon,
        initial_inventory: spec.i_max / 2.0,
    };
    params.validate()?;
    Ok(params)
}

/// Inventory, machine configuration and period index.
#[derive(Debug, Clone, PartialEq)]
pub struct LotSizingState {
    pub inventory: Vec<f64>,
    pub machine_config: Vec<Option<usize>>,
    pub t: usize,
}

impl LotSizingState {
    pub fn initial(params: &LotSizingParams) -> Self {
        Self {
            inventory: vec![params.initial_inventory; params.items()],
            machine_config: vec![None; params.machines()],
            t: 0,
        }
    }
}

/// Setup and production for one period. Returns the post-decision state and
/// the negated setup cost. Switching to idle is free.
pub fn apply_production(
    state: &LotSizingState,
    assignment: &[Option<usize>],
    params: &LotSizingParams,
) -> Result<(LotSizingState, f64)> {
    params.check_assignment(assignment)?;
    if state.t >= params.horizon {
        return Err(Error::State("period index past the horizon".into()));
    }
    let mut inventory = state.inventory.clone();
    let mut setup_cost = 0.0;
    for (j, (&assigned, &current)) in assignment.iter().zip(&state.machine_config).enumerate() {
        if let Some(i) = assigned {
            let setup = current != Some(i);
            let mut produced = params.capacity[i][j];
            if setup {
                setup_cost += params.setup_cost[i];
                produced -= params.setup_loss[i][j];
            }
            inventory[i] += produced;
        }
    }
    for v in &mut inventory {
        *v = v.min(params.i_max);
    }
    let post = LotSizingState {
        inventory,
        machine_config: assignment.to_vec(),
        t: state.t,
    };
    Ok((post, -setup_cost))
}

/// Cost breakdown of the stochastic phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DemandOutcome {
    pub holding_cost: f64,
    pub lost_sales_cost: f64,
    pub lost_units: f64,
}

/// Serves `demand` from the post-decision inventory. Returns the next state,
/// the negated holding plus lost-sales cost, `done`, and a cost breakdown.
pub fn realize_demand_with(
    post: &LotSizingState,
    params: &LotSizingParams,
    demand: &[f64],
) -> (LotSizingState, f64, bool, DemandOutcome) {
    let mut outcome = DemandOutcome::default();
    let mut inventory = Vec::with_capacity(post.inventory.len());
    for (i, (&stock, &d)) in post.inventory.iter().zip(demand).enumerate() {
        let left = (stock - d).max(0.0);
        let short = (d - stock).max(0.0);
        outcome.holding_cost += params.holding_cost[i] * left;
        outcome.lost_sales_cost += params.lost_sale_cost[i] * short;
        outcome.lost_units += short;
        inventory.push(left);
    }
    let t = post.t + 1;
    let next = LotSizingState {
        inventory,
        machine_config: post.machine_config.clone(),
        t,
    };
    let reward = -(outcome.holding_cost + outcome.lost_sales_cost);
    (next, reward, t >= params.horizon, outcome)
}

pub fn realize_demand<R: Rng + ?Sized>(
    post: &LotSizingState,
    params: &LotSizingParams,
    rng: &mut R,
) -> (LotSizingState, f64, bool) {
    let demand: Vec<f64> = params.demand.iter().map(|d| d.sample(rng)).collect();
    let (next, reward, done, _) = realize_demand_with(post, params, &demand);
    (next, reward, done)
}

/// Scaled inventories, then one `items + 1` one-hot block per machine with the
/// idle slot first.
pub fn encode_observation(state: &LotSizingState, params: &LotSizingParams) -> ObsVec {
    let l = params.items();
    let mut v = Vec::with_capacity(params.obs_dim());
    v.extend(state.inventory.iter().map(|&x| x / params.i_max));
    for cfg in &state.machine_config {
        let mut block = vec![0.0; l + 1];
        block[cfg.map_or(0, |i| i + 1)] = 1.0;
        v.extend(block);
    }
    ObsVec::from_finite(v)
}

#[derive(Debug, Clone)]
pub struct LotSizing {
    params: LotSizingParams,
    state: LotSizingState,
    phase: Phase,
    rng: ChaCha8Rng,
    last_info: BTreeMap<String, f64>,
}

impl LotSizing {
    pub fn new(params: LotSizingParams) -> Result<Self> {
        params.validate()?;
        let state = LotSizingState::initial(&params);
        Ok(Self {
            params,
            state,
            phase: Phase::NeedsReset,
            rng: ChaCha8Rng::seed_from_u64(0),
            last_info: BTreeMap::new(),
        })
    }

    /// Instance drawn from `spec.seed`.
    pub fn from_spec(spec: &InstanceSpec) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        Self::new(make_instance(spec, &mut rng)?)
    }

    pub fn params(&self) -> &LotSizingParams {
        &self.params
    }

    pub fn state(&self) -> &LotSizingState {
        &self.state
    }

    /// Overrides the current state and re-enters the pre-decision phase. Test hook.
    pub fn set_state(&mut self, state: LotSizingState) {
        self.state = state;
        self.phase = Phase::PreDecision;
    }

    /// Stochastic phase with an externally supplied demand vector.
    pub fn step_stochastic_with(&mut self, demand: &[f64]) -> Result<(ObsVec, f64, bool)> {
        self.phase.expect_post()?;
        if demand.len() != self.params.items() {
            return Err(Error::Argument("demand vector must have one entry per item".into()));
        }
        let (next, reward, done, outcome) = realize_demand_with(&self.state, &self.params, demand);
        self.state = next;
        self.phase = if done { Phase::Done } else { Phase::PreDecision };
        self.last_info.insert("holding_cost".into(), outcome.holding_cost);
        self.last_info.insert("lost_sales_cost".into(), outcome.lost_sales_cost);
        self.last_info.insert("lost_units".into(), outcome.lost_units);
        self.last_info.insert("demand".into(), demand.iter().sum());
        Ok((encode_observation(&self.state, &self.params), reward, done))
    }
}

impl PostDecisionEnv for LotSizing {
    fn obs_dim(&self) -> usize {
        self.params.obs_dim()
    }

    fn action_spec(&self) -> ActionSpec {
        self.params.action_space()
    }

    fn reset(&mut self, seed: u64) -> ObsVec {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = LotSizingState::initial(&self.params);
        self.phase = Phase::PreDecision;
        self.last_info.clear();
        encode_observation(&self.state, &self.params)
    }

    fn step_deterministic(&mut self, action: &Action) -> Result<(ObsVec, f64)> {
        let assignment = self.params.decode_action(action)?;
        self.phase.expect_pre()?;
        let (post, reward) = apply_production(&self.state, &assignment, &self.params)?;
        self.state = post;
        self.phase = Phase::PostDecision;
        self.last_info.clear();
        self.last_info.insert("setup_cost".into(), -reward);
        Ok((encode_observation(&self.state, &self.params), reward))
    }

    fn step_stochastic(&mut self) -> Result<(ObsVec, f64, bool)> {
        self.phase.expect_post()?;
        let demand: Vec<f64> = self.params.demand.iter().map(|d| d.sample(&mut self.rng)).collect();
        self.step_stochastic_with(&demand)
    }

    fn info(&self) -> BTreeMap<String, f64> {
        self.last_info.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// One item, one machine: f=7, p=10, c=3, h=1, l=4.
    fn single() -> LotSizingParams {
        LotSizingParams {
            setup_cost: vec![7.0],
            holding_cost: vec![1.0],
            lost_sale_cost: vec![4.0],
            capacity: vec![vec![10.0]],
            setup_loss: vec![vec![3.0]],
            compat: vec![vec![0]],
            i_max: 100.0,
            demand: vec![Demand::Constant { value: 0.0 }],
            horizon: 10,
            initial_inventory: 0.0,
        }
    }

    fn state(inv: Vec<f64>, cfg: Vec<Option<usize>>) -> LotSizingState {
        LotSizingState {
            inventory: inv,
            machine_config: cfg,
            t: 0,
        }
    }

    #[test]
    fn switch_charges_setup_and_loses_production() {
        let p = single();
        let (post, r) = apply_production(&state(vec![0.0], vec![None]), &[Some(0)], &p).unwrap();
        assert_eq!(r, -7.0);
        assert_eq!(post.inventory, vec![7.0]);
        assert_eq!(post.machine_config, vec![Some(0)]);
    }

    #[test]
    fn keeping_configuration_is_free() {
        let p = single();
        let (post, r) = apply_production(&state(vec![5.0], vec![Some(0)]), &[Some(0)], &p).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(post.inventory, vec![15.0]);
    }

    #[test]
    fn idle_everywhere_changes_nothing() {
        let p = single();
        let (post, r) = apply_production(&state(vec![5.0], vec![Some(0)]), &[None], &p).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(post.inventory, vec![5.0]);
    }

    #[test]
    fn production_is_capped() {
        let mut p = single();
        p.i_max = 8.0;
        let (post, _) = apply_production(&state(vec![5.0], vec![Some(0)]), &[Some(0)], &p).unwrap();
        assert_eq!(post.inventory, vec![8.0]);
    }

    #[test]
    fn demand_costs() {
        let p = single();
        let post = state(vec![5.0], vec![None]);
        let (next, r, done, _) = realize_demand_with(&post, &p, &[8.0]);
        assert_eq!(next.inventory, vec![0.0]);
        assert_eq!(r, -12.0);
        assert!(!done);

        let (next, r, _, _) = realize_demand_with(&post, &p, &[0.0]);
        assert_eq!(next.inventory, vec![5.0]);
        assert_eq!(r, -5.0);

        let (next, r, _, _) = realize_demand_with(&post, &p, &[5.0]);
        assert_eq!(next.inventory, vec![0.0]);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn horizon_ends_episode() {
        let mut p = single();
        p.horizon = 2;
        let mut env = LotSizing::new(p).unwrap();
        env.reset(0);
        assert!(!env.step(&Action(vec![0])).unwrap().done);
        assert!(env.step(&Action(vec![0])).unwrap().done);
        assert!(matches!(env.step(&Action(vec![0])), Err(Error::PhaseOrder(_))));
    }

    #[test]
    fn incompatible_item_rejected() {
        let mut p = single();
        p.setup_cost.push(1.0);
        p.holding_cost.push(1.0);
        p.lost_sale_cost.push(1.0);
        p.capacity.push(vec![1.0]);
        p.setup_loss.push(vec![0.0]);
        p.demand.push(Demand::Constant { value: 0.0 });
        let err = apply_production(&state(vec![0.0, 0.0], vec![None]), &[Some(1)], &p).unwrap_err();
        assert!(matches!(err, Error::InvalidAction(_)));
    }

    #[test]
    fn observation_layout() {
        let spec = InstanceSpec {
            compat_density: 1.0,
            ..Default::default()
        };
        let env = LotSizing::from_spec(&spec).unwrap();
        let p = env.params();
        assert_eq!(p.obs_dim(), 17);
        assert_eq!(p.action_space(), ActionSpec::MultiDiscrete(vec![6, 6]));

        let empty = state(vec![0.0; 5], vec![None, None]);
        let o = encode_observation(&empty, p);
        assert!(o.as_slice()[..5].iter().all(|&v| v == 0.0));
        assert_eq!(o.as_slice()[5], 1.0);
        assert_eq!(o.as_slice()[11], 1.0);
        assert_eq!(o.as_slice().iter().sum::<f64>(), 2.0);

        let mut full = empty.clone();
        full.inventory[0] = p.i_max;
        assert_eq!(encode_observation(&full, p).as_slice()[0], 1.0);
    }

    #[test]
    fn single_machine_action_space() {
        let mut p = single();
        p.compat = vec![vec![0, 1, 2]];
        for _ in 0..2 {
            p.setup_cost.push(1.0);
            p.holding_cost.push(1.0);
            p.lost_sale_cost.push(1.0);
            p.capacity.push(vec![1.0]);
            p.setup_loss.push(vec![0.0]);
            p.demand.push(Demand::Constant { value: 0.0 });
        }
        assert_eq!(p.action_space(), ActionSpec::MultiDiscrete(vec![4]));
    }

    #[test]
    fn degenerate_instances_rejected() {
        let mut p = single();
        p.compat.clear();
        for row in p.capacity.iter_mut().chain(p.setup_loss.iter_mut()) {
            row.clear();
        }
        assert!(LotSizing::new(p).is_err());
        let spec = InstanceSpec {
            machines: 0,
            ..Default::default()
        };
        assert!(LotSizing::from_spec(&spec).is_err());
        let spec = InstanceSpec {
            items: 1,
            machines: 3,
            ..Default::default()
        };
        assert!(LotSizing::from_spec(&spec).is_err());
    }

    #[test]
    fn instances_are_reproducible() {
        let spec = InstanceSpec {
            items: 15,
            machines: 5,
            i_max: 100.0,
            ..Default::default()
        };
        let a = LotSizing::from_spec(&spec).unwrap();
        let b = LotSizing::from_spec(&spec).unwrap();
        assert_eq!(a.params(), b.params());
        let p = a.params();
        assert_eq!((p.items(), p.machines(), p.i_max), (15, 5, 100.0));
        let mut covered = vec![false; 15];
        for items in &p.compat {
            for &i in items {
                covered[i] = true;
            }
        }
        assert!(covered.iter().all(|&c| c));
    }

    #[test]
    fn reset_state() {
        let mut env = LotSizing::from_spec(&InstanceSpec::default()).unwrap();
        env.reset(5);
        assert!(env.state().inventory.iter().all(|&v| v == 10.0));
        assert!(env.state().machine_config.iter().all(Option::is_none));
    }

    #[test]
    fn poisson_demand_is_truncated() {
        let d = Demand::Poisson { mean: 2.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples: Vec<f64> = (0..20_000).map(|_| d.sample(&mut rng)).collect();
        assert!(samples.iter().all(|&s| (0.0..=8.0).contains(&s) && s.fract() == 0.0));
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        assert_abs_diff_eq!(mean, 2.0, epsilon = 0.05);
    }
}
