use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bundle::{read_jsonl, ProblemBundle, Split};
use super::HarnessError;
use crate::agents::{run_episode, AgentEndpoint, EpisodeContext};
use crate::env::{EnvConfig, EpisodeResult};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub agent: AgentEndpoint,
    pub env: EnvConfig,
    pub parallel: usize,
    /// Restrict to one split; `None` runs every bundle.
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub selected: usize,
    pub already_done: usize,
    pub completed: usize,
    /// Episodes that ended on a transport or setup error.
    pub errored: usize,
}

/// Cuts a partially written final line left by an interrupted run.
fn repair_tail(path: &Path) -> Result<(), HarnessError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| HarnessError::io(path, e))?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    log::warn!("{}: dropping {} bytes of a truncated record", path.display(), bytes.len() - keep);
    OpenOptions::new()
        .write(true)
        .open(path)
        .and_then(|f| f.set_len(keep as u64))
        .map_err(|e| HarnessError::io(path, e))
}

/// Runs every selected bundle not yet present in `out`, appending one result
/// line per finished episode. Safe to re-run after an interruption.
pub fn run_eval(bundles: &[ProblemBundle], opts: &RunOptions, out: &Path) -> Result<RunSummary, HarnessError> {
    let mut done = HashSet::new();
    if out.exists() {
        repair_tail(out)?;
        for r in read_jsonl::<EpisodeResult>(out)? {
            done.insert(r.problem_id);
        }
    }
    let selected: Vec<&ProblemBundle> = bundles
        .iter()
        .filter(|b| opts.split.map_or(true, |s| b.split == s))
        .collect();
    let todo: Vec<&ProblemBundle> = selected.iter().copied().filter(|b| !done.contains(&b.id)).collect();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out)
        .map_err(|e| HarnessError::io(out, e))?;
    let sink = Mutex::new(file);
    let pool = super::thread_pool(opts.parallel)?;
    let outcomes: Vec<bool> = pool.install(|| {
        todo.par_iter()
            .map(|b| -> Result<bool, HarnessError> {
                let result = episode(b, opts);
                let mut line = serde_json::to_string(&result).map_err(|e| HarnessError::Serialize(e.to_string()))?;
                line.push('\n');
                let mut f = sink.lock().unwrap_or_else(|p| p.into_inner());
                f.write_all(line.as_bytes())
                    .and_then(|_| f.flush())
                    .map_err(|e| HarnessError::io(out, e))?;
                Ok(result.error.is_some())
            })
            .collect::<Result<_, _>>()
    })?;
    Ok(RunSummary {
        selected: selected.len(),
        already_done: selected.len() - todo.len(),
        completed: outcomes.len(),
        errored: outcomes.iter().filter(|&&e| e).count(),
    })
}

fn episode(b: &ProblemBundle, opts: &RunOptions) -> EpisodeResult {
    let label = opts.agent.identity.as_str();
    let problem = match b.to_problem() {
        Ok(p) => p,
        Err(e) => return setup_failure(b, label, &format!("cannot rebuild model: {e}"), &opts.env),
    };
    let ctx = EpisodeContext {
        ground_truth_fix: &b.sabotage.ground_truth_fix,
        mean_demand: b.instance.mean_demand(),
    };
    match opts.agent.connect(&ctx) {
        Ok(mut agent) => run_episode(problem, agent.as_mut(), label, &opts.env),
        Err(e) => {
            let mut env = crate::env::Environment::new(problem, opts.env.clone());
            env.set_agent_label(label);
            env.abort(&e.to_string())
        }
    }
}

fn setup_failure(b: &ProblemBundle, label: &str, msg: &str, env: &EnvConfig) -> EpisodeResult {
    let problem = crate::env::Problem {
        id: b.id.clone(),
        error_type: b.error_type,
        nl_description: b.nl_description.clone(),
        instance: b.instance.clone(),
        model: crate::Model::default(),
        gt_iis: b.sabotage.gt_iis.clone(),
    };
    let mut e = crate::env::Environment::new(problem, env.clone());
    e.set_agent_label(label);
    e.abort(msg)
}
