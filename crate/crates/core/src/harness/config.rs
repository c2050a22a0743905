use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::{AgentConfig, AgentKind};
use crate::env::frozenlake::{FrozenLake, FrozenLakeConfig};
use crate::env::lotsizing::{InstanceSpec, LotSizing};
use crate::env::{Action, ActionSpec, ObsVec, PostDecisionEnv};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    FrozenLake,
    LotSizing,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::FrozenLake => "frozenlake",
            EnvKind::LotSizing => "lotsizing",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frozenlake" => Ok(EnvKind::FrozenLake),
            "lotsizing" => Ok(EnvKind::LotSizing),
            other => Err(Error::Config(format!(
                "unknown environment `{other}` (expected frozenlake or lotsizing)"
            ))),
        }
    }
}

/// Which environment to train on, tagged by `kind` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvSpec {
    FrozenLake(FrozenLakeConfig),
    LotSizing(InstanceSpec),
}

impl EnvSpec {
    pub fn kind(&self) -> EnvKind {
        match self {
            EnvSpec::FrozenLake(_) => EnvKind::FrozenLake,
            EnvSpec::LotSizing(_) => EnvKind::LotSizing,
        }
    }

    pub fn default_for(kind: EnvKind) -> Self {
        match kind {
            EnvKind::FrozenLake => EnvSpec::FrozenLake(FrozenLakeConfig::default()),
            EnvKind::LotSizing => EnvSpec::LotSizing(InstanceSpec::default()),
        }
    }

    /// Builds the environment for one run. Frozen Lake draws a fresh grid from
    /// the run seed; the lot-sizing instance is fixed by its own `seed`.
    pub fn build(&self, run_seed: u64) -> Result<AnyEnv> {
        Ok(match self {
            EnvSpec::FrozenLake(cfg) => AnyEnv::FrozenLake(FrozenLake::new(cfg.clone(), run_seed)?),
            EnvSpec::LotSizing(spec) => AnyEnv::LotSizing(LotSizing::from_spec(spec)?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvSpec::FrozenLake(cfg) => cfg.validate(),
            EnvSpec::LotSizing(spec) => LotSizing::from_spec(spec).map(|_| ()),
        }
    }
}

/// Either benchmark environment behind one concrete type.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    FrozenLake(FrozenLake),
    LotSizing(LotSizing),
}

macro_rules! dispatch {
    ($self:ident, $e:ident => $body:expr) => {
        match $self {
            AnyEnv::FrozenLake($e) => $body,
            AnyEnv::LotSizing($e) => $body,
        }
    };
}

impl PostDecisionEnv for AnyEnv {
    fn obs_dim(&self) -> usize {
        dispatch!(self, e => e.obs_dim())
    }

    fn action_spec(&self) -> ActionSpec {
        dispatch!(self, e => e.action_spec())
    }

    fn reset(&mut self, seed: u64) -> ObsVec {
        dispatch!(self, e => e.reset(seed))
    }

    fn step_deterministic(&mut self, action: &Action) -> Result<(ObsVec, f64)> {
        dispatch!(self, e => e.step_deterministic(action))
    }

    fn step_stochastic(&mut self) -> Result<(ObsVec, f64, bool)> {
        dispatch!(self, e => e.step_stochastic())
    }

    fn info(&self) -> std::collections::BTreeMap<String, f64> {
        dispatch!(self, e => e.info())
    }
}

/// Everything needed to reproduce a set of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Method trained by `train`.
    pub agent: AgentKind,
    /// Methods compared by `bench`.
    pub methods: Vec<AgentKind>,
    pub env: EnvSpec,
    pub agent_config: AgentConfig,
    pub total_steps: usize,
    pub n_runs: usize,
    /// Run `i` uses seed `base_seed + i`.
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub parallel_runs: usize,
}

/// Values supplied on the command line (or through environment variables);
/// each one that is set beats the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub agent: Option<AgentKind>,
    pub env: Option<EnvKind>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub runs: Option<usize>,
    pub parallel: Option<usize>,
}

impl ExperimentConfig {
    /// Full-scale defaults for an environment.
    pub fn defaults(kind: EnvKind) -> Self {
        let all = vec![AgentKind::Pdppo, AgentKind::Ppo, AgentKind::Pdppo1c];
        match kind {
            EnvKind::FrozenLake => Self {
                agent: AgentKind::Pdppo,
                methods: all,
                env: EnvSpec::default_for(kind),
                agent_config: AgentConfig::frozen_lake(),
                total_steps: 200_000,
                n_runs: 30,
                base_seed: 0,
                output_dir: PathBuf::from("runs"),
                parallel_runs: 1,
            },
            EnvKind::LotSizing => Self {
                agent: AgentKind::Pdppo,
                methods: all,
                env: EnvSpec::default_for(kind),
                agent_config: AgentConfig::lot_sizing(),
                total_steps: 1_000_000,
                n_runs: 20,
                base_seed: 0,
                output_dir: PathBuf::from("runs"),
                parallel_runs: 1,
            },
        }
    }

    /// 8×8 grid, 50k steps, 10 seeds per method.
    pub fn frozen_lake_desk() -> Self {
        let mut cfg = Self::defaults(EnvKind::FrozenLake);
        cfg.env = EnvSpec::FrozenLake(FrozenLakeConfig {
            n: 8,
            m: 8,
            ..FrozenLakeConfig::default()
        });
        cfg.total_steps = 50_000;
        cfg.n_runs = 10;
        cfg
    }

    /// 5 items, 2 machines, 100k steps, 5 seeds per method.
    pub fn lot_sizing_desk() -> Self {
        let mut cfg = Self::defaults(EnvKind::LotSizing);
        cfg.total_steps = 100_000;
        cfg.n_runs = 5;
        cfg
    }

    /// Layers defaults, then the JSON file, then overrides.
    ///
    /// The file may be partial; nested objects are merged key by key. If the
    /// overrides pick a different environment than the file, the file's `env`
    /// block is dropped.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut file_value = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| Error::Config(format!("invalid JSON in {}: {e}", path.display())))?
            }
            None => Value::Object(Default::default()),
        };
        let Value::Object(obj) = &mut file_value else {
            return Err(Error::Config("config file must hold a JSON object".into()));
        };
        let file_kind = match obj.get("env").and_then(|e| e.get("kind")) {
            Some(Value::String(s)) => Some(s.parse::<EnvKind>()?),
            Some(_) => return Err(Error::Config("env.kind must be a string".into())),
            None if obj.contains_key("env") => {
                return Err(Error::Config("env block needs a `kind`".into()))
            }
            None => None,
        };
        let kind = overrides.env.or(file_kind).unwrap_or(EnvKind::FrozenLake);
        if file_kind.is_some_and(|k| k != kind) {
            obj.remove("env");
        }
        let mut merged = serde_json::to_value(Self::defaults(kind))?;
        merge(&mut merged, file_value);
        let mut cfg: Self = serde_json::from_value(merged)
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(a) = o.agent {
            self.agent = a;
        }
        if let Some(k) = o.env {
            if self.env.kind() != k {
                self.env = EnvSpec::default_for(k);
            }
        }
        if let Some(s) = o.seed {
            self.base_seed = s;
        }
        if let Some(s) = o.steps {
            self.total_steps = s;
        }
        if let Some(p) = &o.out {
            self.output_dir = p.clone();
        }
        if let Some(r) = o.runs {
            self.n_runs = r;
        }
        if let Some(p) = o.parallel {
            self.parallel_runs = p;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        if self.parallel_runs == 0 {
            return Err(Error::Config("parallel_runs must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must name at least one agent".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::Config("methods must not repeat".into()));
        }
        self.agent_config.validate()?;
        if self.total_steps < self.agent_config.window {
            return Err(Error::Config(format!(
                "total_steps ({}) must be at least one window ({})",
                self.total_steps, self.agent_config.window
            )));
        }
        self.base_seed
            .checked_add(self.n_runs as u64 - 1)
            .ok_or_else(|| Error::Config("base_seed + n_runs overflows".into()))?;
        self.env.validate()
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed + run as u64
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
