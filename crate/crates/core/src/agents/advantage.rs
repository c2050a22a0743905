use ndarray::Array2;

use super::{discounted_returns, AgentKind, Transition};
use crate::env::{ObsVec, PreStream};
use crate::error::{Error, Result};
use crate::nn::MlpNet;

const SD_FLOOR: f64 = 1e-8;

/// Which critics score a trajectory.
#[derive(Debug, Clone, Copy)]
pub enum Critics<'a> {
    /// Critic on `s` against `R` (PPO).
    Pre(&'a MlpNet),
    /// Critic on `s^x` against `R^x` (PDPPO1C).
    Post(&'a MlpNet),
    /// Both; the advantage is the elementwise max (PDPPO).
    Dual { pre: &'a MlpNet, post: &'a MlpNet },
}

/// A window of transitions plus the quantities derived from it.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    /// Returns of the stream scored by the pre-decision critic.
    pub returns_pre: Option<Vec<f64>>,
    /// Returns of total rewards, scored by the post-decision critic.
    pub returns_post: Option<Vec<f64>>,
    pub adv_pre: Option<Vec<f64>>,
    pub adv_post: Option<Vec<f64>>,
    /// Selected advantage before normalization.
    pub advantages_raw: Option<Vec<f64>>,
    /// Selected advantage, normalized if requested.
    pub advantages: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(transitions: Vec<Transition>) -> Self {
        Self {
            transitions,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Fills both return streams. PPO scores total rewards on `s`; the
    /// post-decision variants use `pre_stream` for the `s` critic.
    pub fn compute_returns(&mut self, kind: AgentKind, gamma: f64, pre_stream: PreStream, reward_scale: f64) {
        let dones: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        let total: Vec<f64> = self
            .transitions
            .iter()
            .map(|t| t.total_reward * reward_scale)
            .collect();
        let pre_rewards: Vec<f64> = match (kind, pre_stream) {
            (AgentKind::Ppo, _) | (_, PreStream::Total) => total.clone(),
            (_, PreStream::DeterministicOnly) => self
                .transitions
                .iter()
                .map(|t| t.det_reward * reward_scale)
                .collect(),
        };
        self.returns_pre = Some(discounted_returns(&pre_rewards, &dones, gamma));
        self.returns_post = Some(discounted_returns(&total, &dones, gamma));
    }

    pub fn obs_matrix(&self) -> Array2<f64> {
        stack(self.transitions.iter().map(|t| &t.obs))
    }

    pub fn post_obs_matrix(&self) -> Array2<f64> {
        stack(self.transitions.iter().map(|t| &t.post_obs))
    }
}

pub(crate) fn stack<'a>(rows: impl ExactSizeIterator<Item = &'a ObsVec>) -> Array2<f64> {
    let n = rows.len();
    let mut data = Vec::new();
    let mut dim = 0;
    for r in rows {
        dim = r.len();
        data.extend_from_slice(r.as_slice());
    }
    Array2::from_shape_vec((n, dim), data).expect("observations share one dimension")
}

/// Standardizes to mean 0 and SD 1 (population SD, floored at 1e-8).
pub fn normalize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt().max(SD_FLOOR);
    values.iter_mut().for_each(|v| *v = (*v - mean) / sd);
}

fn residuals(critic: &MlpNet, obs: &Array2<f64>, returns: &[f64]) -> Result<Vec<f64>> {
    let values = critic.forward_batch(obs.view())?;
    Ok(returns.iter().zip(values.column(0)).map(|(r, v)| r - v).collect())
}

/// `A_pre = R − V(s)`, `A_x = R^x − V^x(s^x)`, and the selected advantage
/// (their elementwise max when both critics are present).
pub fn compute_advantages(traj: &mut Trajectory, critics: Critics<'_>, normalize_adv: bool) -> Result<()> {
    let missing = || Error::State("returns must be computed before advantages".into());
    traj.adv_pre = None;
    traj.adv_post = None;
    let (pre_critic, post_critic) = match critics {
        Critics::Pre(c) => (Some(c), None),
        Critics::Post(c) => (None, Some(c)),
        Critics::Dual { pre, post } => (Some(pre), Some(post)),
    };
    if let Some(c) = pre_critic {
        let r = traj.returns_pre.as_ref().ok_or_else(missing)?;
        traj.adv_pre = Some(residuals(c, &traj.obs_matrix(), r)?);
    }
    if let Some(c) = post_critic {
        let r = traj.returns_post.as_ref().ok_or_else(missing)?;
        traj.adv_post = Some(residuals(c, &traj.post_obs_matrix(), r)?);
    }
    let raw = match (&traj.adv_pre, &traj.adv_post) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(&x, &y)| x.max(y)).collect(),
        (Some(a), None) => a.clone(),
        (None, Some(b)) => b.clone(),
        (None, None) => unreachable!("at least one critic is always present"),
    };
    let mut adv: Vec<f64> = raw.clone();
    if normalize_adv {
        normalize(&mut adv);
    }
    traj.advantages_raw = Some(raw);
    traj.advantages = Some(adv);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Action;
    use crate::nn::{Activation, Head};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn transition(obs: f64, post: f64, det: f64, total: f64, done: bool) -> Transition {
        Transition {
            obs: ObsVec::new(vec![obs]).unwrap(),
            action: Action::discrete(0),
            logp_old: -0.5,
            det_reward: det,
            post_obs: ObsVec::new(vec![post]).unwrap(),
            total_reward: total,
            done,
        }
    }

    fn constant(v: f64) -> MlpNet {
        MlpNet::from_parameters(vec![array![[0.0]]], vec![array![v]], Activation::Tanh, Head::Linear)
            .unwrap()
    }

    #[test]
    fn advantages_need_returns() {
        let mut traj = Trajectory::new(vec![transition(0.0, 0.0, 0.0, 1.0, true)]);
        let c = constant(0.0);
        assert!(matches!(
            compute_advantages(&mut traj, Critics::Pre(&c), false),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn max_is_selected() {
        // one step: R = 2 (det), R^x = 3 (total); zero critics
        let mut traj = Trajectory::new(vec![transition(0.0, 1.0, 2.0, 3.0, true)]);
        traj.compute_returns(AgentKind::Pdppo, 0.9, PreStream::DeterministicOnly, 1.0);
        let c = constant(0.0);
        compute_advantages(&mut traj, Critics::Dual { pre: &c, post: &c }, false).unwrap();
        assert_eq!(traj.adv_pre.as_ref().unwrap()[0], 2.0);
        assert_eq!(traj.adv_post.as_ref().unwrap()[0], 3.0);
        assert_eq!(traj.advantages.as_ref().unwrap()[0], 3.0);
    }

    #[test]
    fn perfect_critics_give_zero_advantage() {
        let mut traj = Trajectory::new(vec![
            transition(0.0, 0.0, 0.0, 1.5, true),
            transition(0.0, 0.0, 0.0, 1.5, true),
        ]);
        traj.compute_returns(AgentKind::Ppo, 0.9, PreStream::Total, 1.0);
        let c = constant(1.5);
        compute_advantages(&mut traj, Critics::Pre(&c), false).unwrap();
        assert_eq!(traj.advantages.unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn normalization() {
        let mut v = vec![1.0, 2.0, 3.0, 4.0];
        normalize(&mut v);
        let mean: f64 = v.iter().sum::<f64>() / 4.0;
        let var: f64 = v.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
        let mut flat = vec![2.0; 3];
        normalize(&mut flat);
        assert_eq!(flat, vec![0.0; 3]);
    }

    #[test]
    fn ppo_scores_total_reward() {
        let mut traj = Trajectory::new(vec![transition(0.0, 0.0, 1.0, 5.0, true)]);
        traj.compute_returns(AgentKind::Ppo, 0.9, PreStream::DeterministicOnly, 1.0);
        assert_eq!(traj.returns_pre.as_ref().unwrap()[0], 5.0);
        traj.compute_returns(AgentKind::Pdppo, 0.9, PreStream::DeterministicOnly, 0.5);
        assert_eq!(traj.returns_pre.as_ref().unwrap()[0], 0.5);
        assert_eq!(traj.returns_post.as_ref().unwrap()[0], 2.5);
    }
}
