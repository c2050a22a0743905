//! Plain-text parameter dumps.
//!
//! ```text
//! pdppo-checkpoint 1
//! agent <ppo|pdppo|pdppo1c>
//! arities <a1> <a2> ...
//! config <AgentConfig as one-line JSON>
//! net <actor|critic|post_critic> <activation> <head> <layer sizes...>
//! params <count>
//! <one f64 per line, count lines>
//! ... (one net block per network) ...
//! end
//! ```
//!
//! Parameters follow [`MlpNet::params_flat`] order. Values are written with
//! Rust's shortest round-trip formatting, so a load restores them bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::agents::{Agent, AgentConfig, AgentKind};
use crate::env::ActionSpec;
use crate::error::{Error, Result};
use crate::nn::{Activation, Head, MlpNet};

const MAGIC: &str = "pdppo-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: AgentKind,
    pub arities: Vec<usize>,
    pub config: AgentConfig,
    pub actor: MlpNet,
    pub critic: Option<MlpNet>,
    pub post_critic: Option<MlpNet>,
}

impl Checkpoint {
    pub fn from_agent(agent: &Agent) -> Self {
        Self {
            kind: agent.kind(),
            arities: agent.arities().to_vec(),
            config: agent.config().clone(),
            actor: agent.actor().clone(),
            critic: agent.critic().cloned(),
            post_critic: agent.post_critic().cloned(),
        }
    }

    pub fn action_spec(&self) -> ActionSpec {
        if self.arities.len() == 1 {
            ActionSpec::Discrete(self.arities[0])
        } else {
            ActionSpec::MultiDiscrete(self.arities.clone())
        }
    }

    pub fn into_agent(self) -> Result<Agent> {
        let spec = self.action_spec();
        Agent::from_networks(self.kind, self.config, &spec, self.actor, self.critic, self.post_critic)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MAGIC} {VERSION}").unwrap();
        writeln!(out, "agent {}", self.kind).unwrap();
        let arities: Vec<String> = self.arities.iter().map(|a| a.to_string()).collect();
        writeln!(out, "arities {}", arities.join(" ")).unwrap();
        writeln!(out, "config {}", serde_json::to_string(&self.config).expect("config serializes")).unwrap();
        let nets = std::iter::once(("actor", Some(&self.actor)))
            .chain([("critic", self.critic.as_ref()), ("post_critic", self.post_critic.as_ref())]);
        for (name, net) in nets {
            let Some(net) = net else { continue };
            let sizes: Vec<String> = net.layer_sizes().iter().map(|s| s.to_string()).collect();
            writeln!(
                out,
                "net {name} {} {} {}",
                net.activation().name(),
                net.head().name(),
                sizes.join(" ")
            )
            .unwrap();
            let params = net.params_flat();
            writeln!(out, "params {}", params.len()).unwrap();
            for p in params {
                writeln!(out, "{p}").unwrap();
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Structure(format!("malformed checkpoint: {msg}"));
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(&format!("missing {what}")));

        let header = next("header")?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| bad("bad magic"))?;
        if version != VERSION.to_string() {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let kind: AgentKind = field(next("agent")?, "agent")
            .ok_or_else(|| bad("agent line"))?
            .parse()
            .map_err(|_| bad("agent kind"))?;
        let arities = field(next("arities")?, "arities")
            .ok_or_else(|| bad("arities line"))?
            .split_whitespace()
            .map(|a| a.parse::<usize>().map_err(|_| bad("arity")))
            .collect::<Result<Vec<_>>>()?;
        let config: AgentConfig = serde_json::from_str(
            field(next("config")?, "config").ok_or_else(|| bad("config line"))?,
        )
        .map_err(|e| bad(&format!("config: {e}")))?;

        let mut actor = None;
        let mut critic = None;
        let mut post_critic = None;
        loop {
            let line = next("net or end")?;
            if line == "end" {
                break;
            }
            let rest = field(line, "net").ok_or_else(|| bad("expected net"))?;
            let mut parts = rest.split_whitespace();
            let name = parts.next().ok_or_else(|| bad("net name"))?.to_string();
            let activation: Activation = parts
                .next()
                .ok_or_else(|| bad("activation"))?
                .parse()
                .map_err(|_| bad("activation"))?;
            let head: Head = parts
                .next()
                .ok_or_else(|| bad("head"))?
                .parse()
                .map_err(|_| bad("head"))?;
            let sizes = parts
                .map(|s| s.parse::<usize>().map_err(|_| bad("layer size")))
                .collect::<Result<Vec<_>>>()?;
            let count: usize = field(next("params")?, "params")
                .ok_or_else(|| bad("params line"))?
                .parse()
                .map_err(|_| bad("param count"))?;
            let mut flat = Vec::with_capacity(count);
            for _ in 0..count {
                flat.push(next("parameter")?.trim().parse::<f64>().map_err(|_| bad("parameter"))?);
            }
            let mut net = MlpNet::zeros(&sizes, activation, head)?;
            net.set_params_flat(&flat)?;
            let slot = match name.as_str() {
                "actor" => &mut actor,
                "critic" => &mut critic,
                "post_critic" => &mut post_critic,
                other => return Err(bad(&format!("unknown network {other}"))),
            };
            if slot.replace(net).is_some() {
                return Err(bad(&format!("duplicate network {name}")));
            }
        }
        Ok(Self {
            kind,
            arities,
            config,
            actor: actor.ok_or_else(|| bad("no actor"))?,
            critic,
            post_critic,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(key)?;
    if rest.is_empty() {
        Some(rest)
    } else {
        rest.strip_prefix(' ')
    }
}
