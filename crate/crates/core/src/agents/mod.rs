//! Agents that drive the environment: scripted baselines in process, and
//! external agents over the line protocol.

pub mod protocol;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Action, EnvConfig, EnvError, Environment, EpisodeResult, Observation, Problem, StepMeta};
use crate::lp::SolveStatus;
use crate::sc::names;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("agent transport failed: {0}")]
    Transport(String),
    #[error("agent configuration: {0}")]
    Config(String),
}

/// What an agent sends back for one observation.
#[derive(Debug, Clone)]
pub enum Reply {
    Act(Action, StepMeta),
    /// The message could not be turned into an action; it still costs a step.
    Invalid { raw: String, error: String },
}

pub trait Agent: Send {
    fn act(&mut self, obs: &Observation) -> Result<Reply, AgentError>;

    /// Called once with the final result; transports use it to say goodbye.
    fn finish(&mut self, _result: &EpisodeResult) {}
}

/// Replays a recorded fix, then submits.
pub struct ReplayAgent {
    script: std::vec::IntoIter<Action>,
}

impl ReplayAgent {
    pub fn new(fix: Vec<Action>) -> Self {
        ReplayAgent {
            script: fix.into_iter(),
        }
    }
}

impl Agent for ReplayAgent {
    fn act(&mut self, _obs: &Observation) -> Result<Reply, AgentError> {
        Ok(Reply::Act(self.script.next().unwrap_or(Action::Submit), StepMeta::default()))
    }
}

fn cost_feedback_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"objective coefficient of (\S+) is \S+ but the configuration specifies (-?[0-9][0-9.eE+-]*)")
            .expect("static regex")
    })
}

/// IIS-driven baseline: query the IIS, relax the row family that dominates it
/// with doubling amounts, restore any cost coefficient the oracle names, submit.
pub struct GreedyAgent {
    mean_demand: f64,
    relaxed: HashMap<String, u32>,
    restored: Vec<String>,
}

impl GreedyAgent {
    pub fn new(mean_demand: f64) -> Self {
        GreedyAgent {
            mean_demand,
            relaxed: HashMap::new(),
            restored: Vec::new(),
        }
    }

    /// Most frequent `family_e<n>` prefix among IIS rows; ties go to the first seen.
    pub fn dominant_prefix(rows: &[String]) -> Option<String> {
        let mut order: Vec<String> = Vec::new();
        let mut counts: HashMap<String, usize> = HashMap::new();
        for r in rows {
            let prefix = match names::parse_row(r) {
                Some((family, n, _)) => names::echelon_prefix(family, n),
                None => r.clone(),
            };
            let c = counts.entry(prefix.clone()).or_insert(0);
            if *c == 0 {
                order.push(prefix);
            }
            *c += 1;
        }
        let best = order.iter().map(|p| counts[p]).max()?;
        order.into_iter().find(|p| counts[p] == best)
    }
}

impl Agent for GreedyAgent {
    fn act(&mut self, obs: &Observation) -> Result<Reply, AgentError> {
        let action = match obs.status {
            SolveStatus::Infeasible => match &obs.iis {
                None => Action::GetIis,
                Some(iis) => match Self::dominant_prefix(&iis.constraints) {
                    Some(prefix) => {
                        let k = self.relaxed.entry(prefix.clone()).or_insert(0);
                        let amount = self.mean_demand / 2.0 * 2f64.powi(*k as i32);
                        *k += 1;
                        Action::RelaxConstraint { target: prefix, amount }
                    }
                    None => Action::Submit,
                },
            },
            SolveStatus::Optimal => {
                let fix = obs.rationality_feedback.as_deref().and_then(|f| {
                    cost_feedback_regex().captures_iter(f).find_map(|c| {
                        let target = c[1].to_string();
                        let value: f64 = c[2].trim_end_matches('.').parse().ok()?;
                        (!self.restored.contains(&target)).then_some((target, value))
                    })
                });
                match fix {
                    Some((target, value)) => {
                        self.restored.push(target.clone());
                        Action::UpdateObj { target, value }
                    }
                    None => Action::Submit,
                }
            }
            SolveStatus::Unbounded => Action::Submit,
        };
        Ok(Reply::Act(action, StepMeta::default()))
    }
}

/// Runs one episode to completion. Transport failures and internal solver
/// errors end the episode as a failure tagged with the error.
pub fn run_episode(problem: Problem, agent: &mut dyn Agent, label: &str, cfg: &EnvConfig) -> EpisodeResult {
    let mut env = Environment::new(problem, cfg.clone());
    env.set_agent_label(label);
    let mut obs = match env.reset() {
        Ok(o) => o,
        Err(e) => return env.abort(&format!("reset failed: {e}")),
    };
    while !obs.done {
        let step = match agent.act(&obs) {
            Ok(Reply::Act(action, meta)) => env.step_with(action, meta),
            Ok(Reply::Invalid { raw, error }) => env.step_invalid(&raw, &error),
            Err(e) => {
                let r = env.abort(&e.to_string());
                agent.finish(&r);
                return r;
            }
        };
        obs = match step {
            Ok(o) => o,
            Err(EnvError::Finished) => break,
            Err(e) => {
                let r = env.abort(&format!("environment error: {e}"));
                agent.finish(&r);
                return r;
            }
        };
    }
    let result = env.result().cloned().expect("loop exits on a finished episode");
    agent.finish(&result);
    result
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EndpointMode {
    /// Ground-truth replay.
    Replay,
    Greedy,
    SubprocessStdio { command: String },
    Http { url: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentEndpoint {
    pub mode: EndpointMode,
    pub identity: String,
    /// Whether the agent reports its own token usage.
    pub token_reporting: bool,
}

impl AgentEndpoint {
    pub fn in_process(&self) -> bool {
        matches!(self.mode, EndpointMode::Replay | EndpointMode::Greedy)
    }
}

impl FromStr for AgentEndpoint {
    type Err = AgentError;

    /// `gt`, `greedy`, `proto:<shell command>` or `http:<url>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (mode, identity, token_reporting) = if s == "gt" {
            (EndpointMode::Replay, "gt".to_string(), false)
        } else if s == "greedy" {
            (EndpointMode::Greedy, "greedy".to_string(), false)
        } else if let Some(cmd) = s.strip_prefix("proto:") {
            if cmd.trim().is_empty() {
                return Err(AgentError::Config("proto: needs a command".into()));
            }
            (
                EndpointMode::SubprocessStdio {
                    command: cmd.to_string(),
                },
                s.to_string(),
                true,
            )
        } else if let Some(url) = s.strip_prefix("http:") {
            let url = if url.starts_with("//") { format!("http:{url}") } else { url.to_string() };
            if !(url.starts_with("http://") || url.starts_with("https://")) {
                return Err(AgentError::Config(format!("`{url}` is not an http(s) URL")));
            }
            (EndpointMode::Http { url }, s.to_string(), true)
        } else {
            return Err(AgentError::Config(format!(
                "unknown agent `{s}` (expected gt, greedy, proto:CMD or http:URL)"
            )));
        };
        Ok(AgentEndpoint {
            mode,
            identity,
            token_reporting,
        })
    }
}

impl fmt::Display for AgentEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.identity)
    }
}

/// Per-episode inputs an agent factory may use.
pub struct EpisodeContext<'a> {
    pub ground_truth_fix: &'a [Action],
    pub mean_demand: f64,
}

impl AgentEndpoint {
    pub fn connect(&self, ctx: &EpisodeContext<'_>) -> Result<Box<dyn Agent>, AgentError> {
        Ok(match &self.mode {
            EndpointMode::Replay => Box::new(ReplayAgent::new(ctx.ground_truth_fix.to_vec())),
            EndpointMode::Greedy => Box::new(GreedyAgent::new(ctx.mean_demand)),
            EndpointMode::SubprocessStdio { command } => Box::new(protocol::StdioAgent::spawn(command)?),
            EndpointMode::Http { url } => Box::new(protocol::HttpAgent::new(url)),
        })
    }
}
