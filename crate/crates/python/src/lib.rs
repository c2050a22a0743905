//! Python bindings: environments, the MLP, statistics and training.

use pdppo::agents::{self, AgentConfig, AgentKind};
use pdppo::env::frozenlake::{FrozenLake as RsFrozenLake, FrozenLakeConfig};
use pdppo::env::lotsizing::{InstanceSpec, LotSizing as RsLotSizing};
use pdppo::env::{Action, PostDecisionEnv};
use pdppo::harness::{self, EnvKind, EnvSpec};
use pdppo::nn::{Activation, Head, MlpNet as RsMlpNet};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: pdppo::Error) -> PyErr {
    if e.is_config_error() || matches!(e, pdppo::Error::InvalidAction(_) | pdppo::Error::InputShape { .. }) {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Frozen Lake with a deterministic move followed by a stochastic slip.
#[pyclass]
struct FrozenLake {
    inner: RsFrozenLake,
}

#[pymethods]
impl FrozenLake {
    #[new]
    #[pyo3(signature = (n=10, m=10, hole_prob=0.8, p_slip=0.5, episode_cap=200, grid_seed=0))]
    fn new(n: usize, m: usize, hole_prob: f64, p_slip: f64, episode_cap: usize, grid_seed: u64) -> PyResult<Self> {
        let cfg = FrozenLakeConfig {
            n,
            m,
            hole_prob,
            p_slip,
            episode_cap,
        };
        Ok(Self {
            inner: RsFrozenLake::new(cfg, grid_seed).map_err(to_py)?,
        })
    }

    #[getter]
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    #[getter]
    fn position(&self) -> (usize, usize) {
        self.inner.position()
    }

    fn hole_count(&self) -> usize {
        self.inner.grid().hole_count()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.inner.reset(seed).into_vec()
    }

    /// Returns (post_obs, det_reward).
    fn step_deterministic(&mut self, action: usize) -> PyResult<(Vec<f64>, f64)> {
        let (obs, r) = self.inner.step_deterministic(&Action::discrete(action)).map_err(to_py)?;
        Ok((obs.into_vec(), r))
    }

    /// Returns (next_obs, stoch_reward, done).
    fn step_stochastic(&mut self) -> PyResult<(Vec<f64>, f64, bool)> {
        let (obs, r, done) = self.inner.step_stochastic().map_err(to_py)?;
        Ok((obs.into_vec(), r, done))
    }
}

/// Stochastic discrete lot-sizing; actions are one index per machine (0 = idle).
#[pyclass]
struct LotSizing {
    inner: RsLotSizing,
}

#[pymethods]
impl LotSizing {
    #[new]
    #[pyo3(signature = (items=5, machines=2, i_max=20.0, horizon=400, seed=0))]
    fn new(items: usize, machines: usize, i_max: f64, horizon: usize, seed: u64) -> PyResult<Self> {
        let spec = InstanceSpec {
            items,
            machines,
            i_max,
            horizon,
            seed,
            ..InstanceSpec::default()
        };
        Ok(Self {
            inner: RsLotSizing::from_spec(&spec).map_err(to_py)?,
        })
    }

    #[getter]
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    #[getter]
    fn action_arities(&self) -> Vec<usize> {
        self.inner.action_spec().arities()
    }

    #[getter]
    fn inventory(&self) -> Vec<f64> {
        self.inner.state().inventory.clone()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.inner.reset(seed).into_vec()
    }

    fn step_deterministic(&mut self, action: Vec<usize>) -> PyResult<(Vec<f64>, f64)> {
        let (obs, r) = self.inner.step_deterministic(&Action(action)).map_err(to_py)?;
        Ok((obs.into_vec(), r))
    }

    /// Samples demand, or uses `demand` when given.
    #[pyo3(signature = (demand=None))]
    fn step_stochastic(&mut self, demand: Option<Vec<f64>>) -> PyResult<(Vec<f64>, f64, bool)> {
        let (obs, r, done) = match demand {
            Some(d) => self.inner.step_stochastic_with(&d),
            None => self.inner.step_stochastic(),
        }
        .map_err(to_py)?;
        Ok((obs.into_vec(), r, done))
    }
}

/// Dense feed-forward network with Glorot-uniform initialization.
#[pyclass]
struct MlpNet {
    inner: RsMlpNet,
}

#[pymethods]
impl MlpNet {
    #[new]
    #[pyo3(signature = (layer_sizes, activation="tanh", head="linear", seed=0))]
    fn new(layer_sizes: Vec<usize>, activation: &str, head: &str, seed: u64) -> PyResult<Self> {
        let activation: Activation = activation.parse().map_err(to_py)?;
        let head: Head = head.parse().map_err(to_py)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            inner: RsMlpNet::new(&layer_sizes, activation, head, &mut rng).map_err(to_py)?,
        })
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.inner.num_params()
    }

    #[getter]
    fn layer_sizes(&self) -> Vec<usize> {
        self.inner.layer_sizes().to_vec()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.forward(&x).map_err(to_py)
    }

    fn params(&self) -> Vec<f64> {
        self.inner.params_flat()
    }

    fn set_params(&mut self, flat: Vec<f64>) -> PyResult<()> {
        self.inner.set_params_flat(&flat).map_err(to_py)
    }
}

#[pyfunction]
fn discounted_returns(rewards: Vec<f64>, dones: Vec<bool>, gamma: f64) -> PyResult<Vec<f64>> {
    if rewards.len() != dones.len() {
        return Err(PyValueError::new_err("rewards and dones must have equal length"));
    }
    Ok(agents::discounted_returns(&rewards, &dones, gamma))
}

/// Returns (t, df, two-sided p).
#[pyfunction]
fn welch_t_test(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let r = harness::welch_t_test(&a, &b).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((r.t, r.df, r.p))
}

/// Returns (mean, sample SD).
#[pyfunction]
fn aggregate(values: Vec<f64>) -> PyResult<(f64, f64)> {
    harness::aggregate(&values).map_err(to_py)
}

/// Trains one agent and returns its run summary as a dict.
///
/// `config` is an optional JSON object of agent hyperparameters layered over
/// the environment's defaults.
#[pyfunction]
#[pyo3(signature = (agent, env="frozenlake", steps=2000, seed=0, config=None))]
fn train<'py>(
    py: Python<'py>,
    agent: &str,
    env: &str,
    steps: usize,
    seed: u64,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let kind: AgentKind = agent.parse().map_err(to_py)?;
    let env_kind: EnvKind = env.parse().map_err(to_py)?;
    let mut cfg_value = serde_json::to_value(match env_kind {
        EnvKind::FrozenLake => AgentConfig::frozen_lake(),
        EnvKind::LotSizing => AgentConfig::lot_sizing(),
    })
    .expect("config serializes");
    if let Some(text) = config {
        let patch: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let (Some(base), serde_json::Value::Object(patch)) = (cfg_value.as_object_mut(), patch) else {
            return Err(PyValueError::new_err("config must be a JSON object"));
        };
        base.extend(patch);
    }
    let cfg: AgentConfig = serde_json::from_value(cfg_value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let spec = EnvSpec::default_for(env_kind);
    let summary = py
        .detach(|| {
            let e = spec.build(seed)?;
            let (log, _) = agents::train(kind, e, cfg, steps, seed)?;
            Ok::<_, pdppo::Error>(harness::RunSummary::from_log(&log, 0, 0.0))
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("method", summary.method.name())?;
    d.set_item("seed", summary.seed)?;
    d.set_item("max_window_reward", summary.max_window_reward)?;
    d.set_item("total_cumulative_reward", summary.total_cumulative_reward)?;
    d.set_item("reward_curve", summary.reward_curve())?;
    d.set_item("episodes", summary.episode_returns.len())?;
    Ok(d)
}

/// Runs an environment's invariant suite; returns (name, passed, detail) rows.
#[pyfunction]
#[pyo3(signature = (env, trials=1000, seed=0))]
fn env_check(env: &str, trials: usize, seed: u64) -> PyResult<Vec<(String, bool, String)>> {
    let kind: EnvKind = env.parse().map_err(to_py)?;
    let rows = pdppo::checks::run_checks(kind, trials, seed).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.name.to_string(), r.passed, r.detail)).collect())
}

#[pymodule]
fn pdppo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FrozenLake>()?;
    m.add_class::<LotSizing>()?;
    m.add_class::<MlpNet>()?;
    m.add_function(wrap_pyfunction!(discounted_returns, m)?)?;
    m.add_function(wrap_pyfunction!(welch_t_test, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(env_check, m)?)?;
    Ok(())
}
