//! Newline-delimited JSON protocol for external agents.
//!
//! The environment sends `{"type":"observation","protocol":1,...}`; the agent
//! answers with one line holding either an action object
//! (`{"type":"action","action":"RELAX_CONSTRAINT","target":"capacity_e1","value":50.0}`)
//! or a text action (`Action: RELAX_CONSTRAINT(capacity_e1, 50.0)`). Optional
//! `reasoning` and `tokens_used` fields are logged. After the last step the
//! environment sends a `done` message. Over HTTP each message is one POST and
//! the response body is the reply.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Agent, AgentError, Reply};
use crate::env::{parse_action_text, Action, EpisodeResult, Observation, Phase, StepMeta};
use crate::lp::SolveStatus;

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMessage {
    #[serde(rename = "type")]
    pub kind: String,
    pub protocol: u32,
    pub phase: Phase,
    pub step: usize,
    pub done: bool,
    /// Set when the previous reply could not be executed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub payload: Observation,
    pub text: String,
}

impl ObservationMessage {
    pub fn new(obs: &Observation) -> Self {
        let error = obs.last_action.as_ref().filter(|a| !a.ok).map(|a| a.message.clone());
        ObservationMessage {
            kind: "observation".into(),
            protocol: PROTOCOL_VERSION,
            phase: obs.phase,
            step: obs.step,
            done: obs.done,
            error,
            payload: obs.clone(),
            text: obs.render_text(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoneMessage {
    #[serde(rename = "type")]
    pub kind: String,
    pub protocol: u32,
    pub problem_id: String,
    pub final_status: SolveStatus,
    pub rational: bool,
    pub reward_total: f64,
    pub steps_used: usize,
    pub loops_used: usize,
}

impl DoneMessage {
    pub fn new(r: &EpisodeResult) -> Self {
        DoneMessage {
            kind: "done".into(),
            protocol: PROTOCOL_VERSION,
            problem_id: r.problem_id.clone(),
            final_status: r.final_status,
            rational: r.rational,
            reward_total: r.reward_total,
            steps_used: r.steps_used,
            loops_used: r.loops_used,
        }
    }
}

/// Turns one agent message into an action, or an invalid reply with the reason.
pub fn parse_agent_message(line: &str) -> Reply {
    let raw = line.trim().to_string();
    let invalid = |error: String| Reply::Invalid {
        raw: raw.clone(),
        error,
    };
    if raw.starts_with('{') {
        let v: Value = match serde_json::from_str(&raw) {
            Ok(v) => v,
            Err(e) => return invalid(format!("invalid JSON: {e}")),
        };
        let Some(obj) = v.as_object() else {
            return invalid("expected a JSON object".into());
        };
        if let Some(t) = obj.get("type") {
            if t.as_str() != Some("action") {
                return invalid(format!("unexpected message type {t}"));
            }
        }
        let meta = StepMeta {
            reasoning: obj.get("reasoning").and_then(Value::as_str).map(str::to_string),
            tokens: obj.get("tokens_used").and_then(Value::as_u64),
            raw: Some(raw.clone()),
        };
        let parsed = match (obj.get("action"), obj.get("text").and_then(Value::as_str)) {
            (None, Some(text)) => parse_action_text(text),
            _ => Action::from_json(&v),
        };
        return match parsed {
            Ok(a) => Reply::Act(a, meta),
            Err(e) => invalid(e.to_string()),
        };
    }
    match parse_action_text(&raw) {
        Ok(a) => Reply::Act(
            a,
            StepMeta {
                raw: Some(raw.clone()),
                ..StepMeta::default()
            },
        ),
        Err(e) => invalid(e.to_string()),
    }
}

/// An agent process spoken to over its stdin/stdout, one per episode.
pub struct StdioAgent {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl StdioAgent {
    pub fn spawn(command: &str) -> Result<Self, AgentError> {
        Self::spawn_with_timeout(command, DEFAULT_TIMEOUT)
    }

    pub fn spawn_with_timeout(command: &str, timeout: Duration) -> Result<Self, AgentError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AgentError::Transport(format!("cannot start `{command}`: {e}")))?;
        let stdout = child.stdout.take().expect("piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(StdioAgent {
            child,
            stdin,
            lines: rx,
            timeout,
        })
    }

    fn send(&mut self, msg: &impl Serialize) -> Result<(), AgentError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| AgentError::Transport("agent stdin closed".into()))?;
        let mut line = serde_json::to_string(msg).map_err(|e| AgentError::Transport(e.to_string()))?;
        line.push('\n');
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| AgentError::Transport(format!("write to agent failed: {e}")))
    }

    fn receive(&mut self) -> Result<String, AgentError> {
        loop {
            match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) if line.trim().is_empty() => continue,
                Ok(Ok(line)) => return Ok(line),
                Ok(Err(e)) => return Err(AgentError::Transport(format!("read from agent failed: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(AgentError::Transport(format!("no reply within {:?}", self.timeout)))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(AgentError::Transport("agent closed its output".into()))
                }
            }
        }
    }
}

impl Agent for StdioAgent {
    fn act(&mut self, obs: &Observation) -> Result<Reply, AgentError> {
        self.send(&ObservationMessage::new(obs))?;
        let line = self.receive()?;
        Ok(parse_agent_message(&line))
    }

    fn finish(&mut self, result: &EpisodeResult) {
        let _ = self.send(&DoneMessage::new(result));
        self.stdin = None;
    }
}

impl Drop for StdioAgent {
    fn drop(&mut self) {
        self.stdin = None;
        for _ in 0..20 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// An agent behind an HTTP endpoint: one POST per message.
pub struct HttpAgent {
    url: String,
    client: ureq::Agent,
}

impl HttpAgent {
    pub fn new(url: &str) -> Self {
        Self::with_timeout(url, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(url: &str, timeout: Duration) -> Self {
        HttpAgent {
            url: url.to_string(),
            client: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    fn post(&self, msg: &impl Serialize) -> Result<String, AgentError> {
        let body = serde_json::to_value(msg).map_err(|e| AgentError::Transport(e.to_string()))?;
        self.client
            .post(&self.url)
            .send_json(body)
            .map_err(|e| AgentError::Transport(format!("POST {} failed: {e}", self.url)))?
            .into_string()
            .map_err(|e| AgentError::Transport(format!("reading reply failed: {e}")))
    }
}

impl Agent for HttpAgent {
    fn act(&mut self, obs: &Observation) -> Result<Reply, AgentError> {
        let body = self.post(&ObservationMessage::new(obs))?;
        Ok(parse_agent_message(&body))
    }

    fn finish(&mut self, result: &EpisodeResult) {
        let _ = self.post(&DoneMessage::new(result));
    }
}
