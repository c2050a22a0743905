//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use pdppo::env::lotsizing::{LotSizingParams, LotSizingState};
use pdppo::nn::{Activation, GradientTape, Head, MlpNet};
use rand::Rng;

/// Random network with at most three weight layers and 32 units per layer.
pub fn random_net<R: Rng>(rng: &mut R) -> MlpNet {
    let layers = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(1..=32)];
    for _ in 0..layers {
        sizes.push(rng.random_range(1..=32));
    }
    let activation = if rng.random_bool(0.5) { Activation::Tanh } else { Activation::Relu };
    let head = if rng.random_bool(0.5) || sizes[layers] == 1 { Head::Linear } else { Head::Softmax };
    let mut net = MlpNet::new(&sizes, activation, head, rng).unwrap();
    // Glorot init leaves biases at zero, so a layer fed by all-dead ReLUs sits
    // exactly on the kink; jitter every parameter to move off it.
    let jittered: Vec<f64> = net.params_flat().iter().map(|p| p + rng.random_range(-0.1..0.1)).collect();
    net.set_params_flat(&jittered).unwrap();
    net
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

/// Loss `Σ g ⊙ net(x)` evaluated from scratch.
fn weighted_output(net: &MlpNet, x: &Array2<f64>, g: &Array2<f64>) -> f64 {
    (&net.forward_batch(x.view()).unwrap() * g).sum()
}

/// Largest relative error between the analytic gradient and central
/// differences with step `h`. Gradients smaller than `floor` are compared on
/// an absolute scale of `floor`.
pub fn gradient_check(net: &MlpNet, x: &Array2<f64>, g: &Array2<f64>, h: f64, floor: f64) -> f64 {
    let (_, cache) = net.forward_cached(x.view()).unwrap();
    let mut tape = GradientTape::for_net(net);
    net.backward(&cache, g.view(), &mut tape).unwrap();
    let analytic = tape.flat();

    let base = net.params_flat();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[k] = base[k] + h;
        probe.set_params_flat(&p).unwrap();
        let up = weighted_output(&probe, x, g);
        p[k] = base[k] - h;
        probe.set_params_flat(&p).unwrap();
        let down = weighted_output(&probe, x, g);
        let numeric = (up - down) / (2.0 * h);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        worst = worst.max(rel);
    }
    worst
}

/// `R_t = Σ_{k=t}^{end} γ^{k−t} r_k`, where `end` is the first done at or
/// after `t` (or the last index).
pub fn brute_force_returns(rewards: &[f64], dones: &[bool], gamma: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|t| {
            let mut total = 0.0;
            for k in t..rewards.len() {
                total += gamma.powi((k - t) as i32) * rewards[k];
                if dones[k] {
                    break;
                }
            }
            total
        })
        .collect()
}

/// One period of the lot-sizing cost written out term by term:
/// `C = Σ_j Σ_i f_i δ_ij + Σ_i h_i [Î_i − d_i]⁺ + Σ_i l_i [d_i − Î_i]⁺`, with
/// `Î_i = min(I_max, I_i + Σ_j (p_ij − c_ij δ_ij))`.
/// Returns (C, next inventory).
pub fn lot_sizing_cost(
    params: &LotSizingParams,
    state: &LotSizingState,
    assignment: &[Option<usize>],
    demand: &[f64],
) -> (f64, Vec<f64>) {
    let items = state.inventory.len();
    let mut setup = 0.0;
    let mut produced = vec![0.0; items];
    for (j, a) in assignment.iter().enumerate() {
        let Some(i) = *a else { continue };
        let switched = state.machine_config[j] != Some(i);
        if switched {
            setup += params.setup_cost[i];
        }
        produced[i] += params.capacity[i][j] - if switched { params.setup_loss[i][j] } else { 0.0 };
    }
    let mut holding = 0.0;
    let mut lost = 0.0;
    let mut next = vec![0.0; items];
    for i in 0..items {
        let post = f64::min(params.i_max, state.inventory[i] + produced[i]);
        holding += params.holding_cost[i] * f64::max(post - demand[i], 0.0);
        lost += params.lost_sale_cost[i] * f64::max(demand[i] - post, 0.0);
        next[i] = f64::max(post - demand[i], 0.0);
    }
    (setup + holding + lost, next)
}

/// Random assignment of each machine to idle or a compatible item.
pub fn random_assignment<R: Rng>(params: &LotSizingParams, rng: &mut R) -> Vec<Option<usize>> {
    params
        .compat
        .iter()
        .map(|items| {
            let k = rng.random_range(0..=items.len());
            if k == 0 {
                None
            } else {
                Some(items[k - 1])
            }
        })
        .collect()
}

/// One-sided Welch p-value for `mean(a) > mean(b)`, or None if undefined.
pub fn one_sided_p(a: &[f64], b: &[f64]) -> Option<f64> {
    pdppo::harness::welch_t_test(a, b).ok().map(|r| r.p_greater())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
