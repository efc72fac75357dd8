//! The two-phase repair environment: a deterministic state machine over one
//! sabotaged model, driven by the eight actions.

pub mod action;
mod observation;
pub mod reward;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{parse_action, parse_action_text, Action, ActionCategory, ActionKind, ActionParseError};
pub use observation::{ActionReport, CheckLine, HistoryItem, IisView, ModelSummary, Observation};
pub use reward::{composite, episode_reward, Composite, Reward};

use crate::lp::{compute_iis, near_misses, Constraint, LpError, Sense, SolveStatus};
use crate::oracle::{evaluate, OracleConfig, RationalityVerdict};
use crate::saboteur::ErrorType;
use crate::sc::ScInstance;
use crate::{Certificate, Model, Outcome, Solver, SolverOptions};

pub const STEP_BUDGET: usize = 20;
pub const MAX_LOOPS: usize = 3;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode not started; call reset first")]
    NotStarted,
    #[error("episode already finished")]
    Finished,
    #[error(transparent)]
    Solver(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    Debug,
    Validate,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Debug => "DEBUG",
            Phase::Validate => "VALIDATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub step_budget: usize,
    pub max_loops: usize,
    /// Attach the IIS to every infeasible observation without a GET_IIS query.
    pub auto_iis: bool,
    pub iis_display_limit: usize,
    pub structure_names: usize,
    pub history_window: usize,
    pub oracle: OracleConfig,
    pub solver: SolverOptions,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            step_budget: STEP_BUDGET,
            max_loops: MAX_LOOPS,
            auto_iis: true,
            iis_display_limit: 25,
            structure_names: 10,
            history_window: 5,
            oracle: OracleConfig::default(),
            solver: SolverOptions::default(),
        }
    }
}

/// Everything an episode needs: the sabotaged model plus the reference configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub id: String,
    pub error_type: ErrorType,
    pub nl_description: String,
    pub instance: ScInstance,
    pub model: Model,
    pub gt_iis: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: usize,
    pub phase: Phase,
    /// `None` when the agent's message could not be parsed.
    pub kind: Option<ActionKind>,
    pub action: Option<Action>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    pub ok: bool,
    pub message: String,
    /// Rows (or the variable, for bound updates) the action resolved to.
    pub expanded_targets: Vec<String>,
    pub status: SolveStatus,
    pub loop_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    Rational,
    Submitted,
    BudgetExhausted,
    LoopsExhausted,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub problem_id: String,
    pub error_type: ErrorType,
    pub agent: String,
    pub final_status: SolveStatus,
    pub rational: bool,
    pub reward_outcome: f64,
    pub reward_rationality: f64,
    pub reward_total: f64,
    pub composite: Composite,
    pub steps_used: usize,
    pub loops_used: usize,
    pub token_count: u64,
    pub tokens_reported: bool,
    pub terminal_reason: TerminalReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub verdict: Option<RationalityVerdict>,
    pub transcript: Vec<TranscriptEntry>,
}

impl EpisodeResult {
    pub fn recovered(&self) -> bool {
        self.final_status == SolveStatus::Optimal
    }
}

/// Optional agent-side annotations accompanying an action.
#[derive(Debug, Clone, Default)]
pub struct StepMeta {
    pub reasoning: Option<String>,
    pub tokens: Option<u64>,
    /// The agent's raw message, used for the token estimate.
    pub raw: Option<String>,
}

#[derive(Debug, Clone)]
struct Pending {
    report: Option<ActionReport>,
    transition: Option<String>,
    checks: bool,
}

pub struct Environment {
    cfg: EnvConfig,
    solver: Solver,
    problem: Problem,
    agent: String,
    model: Model,
    outcome: Option<Outcome>,
    iis: Option<Certificate>,
    iis_visible: bool,
    phase: Phase,
    step: usize,
    loop_count: usize,
    feedback: Option<String>,
    verdict: Option<RationalityVerdict>,
    pending: Pending,
    transcript: Vec<TranscriptEntry>,
    tokens_reported: Option<u64>,
    tokens_estimated: u64,
    result: Option<EpisodeResult>,
}

fn words(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

impl Environment {
    pub fn new(problem: Problem, cfg: EnvConfig) -> Self {
        let solver = Solver::new(cfg.solver);
        let model = problem.model.clone();
        Environment {
            cfg,
            solver,
            problem,
            agent: String::new(),
            model,
            outcome: None,
            iis: None,
            iis_visible: false,
            phase: Phase::Debug,
            step: 0,
            loop_count: 0,
            feedback: None,
            verdict: None,
            pending: Pending {
                report: None,
                transition: None,
                checks: false,
            },
            transcript: Vec::new(),
            tokens_reported: None,
            tokens_estimated: 0,
            result: None,
        }
    }

    pub fn set_agent_label(&mut self, label: impl Into<String>) {
        self.agent = label.into();
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn status(&self) -> Option<SolveStatus> {
        self.outcome.as_ref().map(|o| o.status)
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_done(&self) -> bool {
        self.result.is_some()
    }

    pub fn result(&self) -> Option<&EpisodeResult> {
        self.result.as_ref()
    }

    pub fn reset(&mut self) -> Result<Observation, EnvError> {
        self.model = self.problem.model.clone();
        self.iis = None;
        self.iis_visible = false;
        self.step = 0;
        self.loop_count = 0;
        self.feedback = None;
        self.verdict = None;
        self.transcript.clear();
        self.tokens_reported = None;
        self.tokens_estimated = 0;
        self.result = None;
        self.pending = Pending {
            report: None,
            transition: None,
            checks: false,
        };
        let outcome = self.solver.solve(&self.model)?;
        let status = outcome.status;
        self.outcome = Some(outcome);
        match status {
            SolveStatus::Optimal => {
                self.phase = Phase::Validate;
                let v = self.run_oracle();
                if !v.pass {
                    self.feedback = Some(v.feedback.clone());
                }
                self.pending.checks = true;
                self.verdict = Some(v);
            }
            _ => {
                self.phase = Phase::Debug;
                if self.cfg.auto_iis && status == SolveStatus::Infeasible {
                    self.ensure_iis()?;
                    self.iis_visible = true;
                }
            }
        }
        let obs = self.observe();
        self.tokens_estimated += words(&obs.render_text());
        Ok(obs)
    }

    fn run_oracle(&self) -> RationalityVerdict {
        let outcome = self.outcome.as_ref().expect("solved");
        evaluate(
            &self.model,
            outcome,
            &self.problem.instance,
            self.problem.error_type,
            &self.cfg.oracle,
        )
        .expect("oracle runs on optimal outcomes only")
    }

    fn ensure_iis(&mut self) -> Result<(), EnvError> {
        if self.iis.is_none() {
            self.iis = Some(compute_iis(&self.model, &self.cfg.solver)?);
        }
        Ok(())
    }

    fn current_status(&self) -> SolveStatus {
        self.outcome.as_ref().map_or(SolveStatus::Infeasible, |o| o.status)
    }

    pub fn observe(&self) -> Observation {
        let status = self.current_status();
        let iis = match (&self.iis, self.iis_visible && status == SolveStatus::Infeasible) {
            (Some(c), true) => {
                let lim = self.cfg.iis_display_limit;
                let constraints: Vec<String> = c.constraint_members.iter().take(lim).cloned().collect();
                let room = lim.saturating_sub(constraints.len());
                let bounds: Vec<String> = c.bound_members.iter().take(room).map(|b| b.to_string()).collect();
                Some(IisView {
                    truncated: constraints.len() + bounds.len() < c.len(),
                    constraints,
                    bounds,
                    total: c.len(),
                })
            }
            _ => None,
        };
        let history = self
            .transcript
            .iter()
            .rev()
            .take(self.cfg.history_window)
            .rev()
            .map(|e| HistoryItem {
                step: e.step,
                action: e
                    .action
                    .as_ref()
                    .map(ToString::to_string)
                    .or_else(|| e.raw.clone())
                    .unwrap_or_default(),
                ok: e.ok,
                status: e.status,
            })
            .collect();
        let checks = if self.pending.checks {
            self.verdict.as_ref().map(|v| {
                v.checks
                    .iter()
                    .map(|c| CheckLine {
                        check: c.check.label().to_string(),
                        status: c.status.label().to_string(),
                    })
                    .collect()
            })
        } else {
            None
        };
        let summary = self.result.as_ref().map(|r| {
            let head = match (r.final_status, r.rational) {
                (SolveStatus::Optimal, true) => "Episode finished: the model is optimal and passed every applicable rationality check.".to_string(),
                (SolveStatus::Optimal, false) => "Episode finished: the model is optimal but fails rationality checks.".to_string(),
                (s, _) => format!("Episode finished with solver status {}.", s.label()),
            };
            format!(
                "{head}\nTotal steps: {} | Loops: {} | Reward: {}",
                r.steps_used, r.loops_used, r.reward_total
            )
        });
        Observation {
            problem_id: self.problem.id.clone(),
            nl_description: self.problem.nl_description.clone(),
            status,
            objective: self.outcome.as_ref().and_then(|o| o.objective),
            step: self.step,
            step_budget: self.cfg.step_budget,
            phase: self.phase,
            loop_count: self.loop_count,
            iis,
            model_summary: ModelSummary {
                n_constraints: self.model.n_constraints(),
                n_variables: self.model.n_variables(),
                first_constraints: self
                    .model
                    .constraint_names()
                    .take(self.cfg.structure_names)
                    .map(str::to_string)
                    .collect(),
            },
            last_action: self.pending.report.clone(),
            transition: self.pending.transition.clone(),
            rationality_feedback: self.feedback.clone(),
            checks,
            history,
            done: self.result.is_some(),
            summary,
        }
    }

    pub fn step(&mut self, action: Action) -> Result<Observation, EnvError> {
        self.step_with(action, StepMeta::default())
    }

    pub fn step_with(&mut self, action: Action, meta: StepMeta) -> Result<Observation, EnvError> {
        self.begin_step(&meta)?;
        let phase = self.phase;
        let kind = action.kind();
        let (ok, message, targets) = match self.execute(&action)? {
            Ok((msg, targets)) => (true, msg, targets),
            Err(msg) => (false, msg, Vec::new()),
        };
        self.pending.report = Some(ActionReport {
            action: action.to_string(),
            ok,
            message: message.clone(),
        });
        let raw = meta.raw.clone();
        self.transcript.push(TranscriptEntry {
            step: self.step,
            phase,
            kind: Some(kind),
            action: Some(action.clone()),
            raw,
            reasoning: meta.reasoning,
            ok,
            message,
            expanded_targets: targets,
            status: self.current_status(),
            loop_count: self.loop_count,
        });
        if ok && kind.is_repair() {
            self.after_repair()?;
        }
        if kind == ActionKind::Submit && self.result.is_none() {
            self.finish(TerminalReason::Submitted, None);
        }
        self.end_step(meta.raw.is_none().then(|| action.to_string()))
    }

    /// Records an unparseable agent message; it consumes a step and changes nothing else.
    pub fn step_invalid(&mut self, raw: &str, error: &str) -> Result<Observation, EnvError> {
        let meta = StepMeta {
            raw: Some(raw.to_string()),
            ..StepMeta::default()
        };
        self.begin_step(&meta)?;
        let message = format!("could not parse action: {error}");
        self.pending.report = Some(ActionReport {
            action: raw.chars().take(80).collect(),
            ok: false,
            message: message.clone(),
        });
        self.transcript.push(TranscriptEntry {
            step: self.step,
            phase: self.phase,
            kind: None,
            action: None,
            raw: Some(raw.to_string()),
            reasoning: None,
            ok: false,
            message,
            expanded_targets: Vec::new(),
            status: self.current_status(),
            loop_count: self.loop_count,
        });
        self.end_step(None)
    }

    /// Ends the episode as a failure, e.g. when the agent's transport is lost.
    pub fn abort(&mut self, reason: &str) -> EpisodeResult {
        if self.result.is_none() {
            self.finish(TerminalReason::Aborted, Some(reason.to_string()));
        }
        self.result.clone().expect("finished")
    }

    fn begin_step(&mut self, meta: &StepMeta) -> Result<(), EnvError> {
        if self.outcome.is_none() {
            return Err(EnvError::NotStarted);
        }
        if self.result.is_some() {
            return Err(EnvError::Finished);
        }
        self.step += 1;
        self.pending = Pending {
            report: None,
            transition: None,
            checks: false,
        };
        if let Some(t) = meta.tokens {
            *self.tokens_reported.get_or_insert(0) += t;
        }
        if let Some(r) = &meta.raw {
            self.tokens_estimated += words(r);
        }
        Ok(())
    }

    fn end_step(&mut self, action_text: Option<String>) -> Result<Observation, EnvError> {
        if self.result.is_none() && self.step >= self.cfg.step_budget {
            self.finish(TerminalReason::BudgetExhausted, None);
        }
        if let Some(a) = action_text {
            self.tokens_estimated += words(&a);
        }
        let obs = self.observe();
        self.tokens_estimated += words(&obs.render_text());
        if let Some(r) = self.result.as_mut() {
            r.token_count = self.tokens_reported.unwrap_or(self.tokens_estimated);
        }
        Ok(obs)
    }

    /// Runs one action. The outer error is an internal failure; the inner one
    /// is an action error reported to the agent.
    #[allow(clippy::type_complexity)]
    fn execute(&mut self, action: &Action) -> Result<Result<(String, Vec<String>), String>, EnvError> {
        let status = self.current_status();
        match action {
            Action::Submit => Ok(Ok(("submitted".into(), Vec::new()))),
            Action::GetIis => {
                if status != SolveStatus::Infeasible {
                    return Ok(Err(format!(
                        "the model is {}; an IIS exists only for infeasible models",
                        status.label()
                    )));
                }
                self.ensure_iis()?;
                self.iis_visible = true;
                let c = self.iis.as_ref().expect("computed");
                Ok(Ok((
                    format!(
                        "IIS has {} constraints and {} bounds",
                        c.constraint_members.len(),
                        c.bound_members.len()
                    ),
                    Vec::new(),
                )))
            }
            Action::CheckSlack { name } => {
                let Some(outcome) = self.outcome.as_ref().filter(|o| o.is_optimal()) else {
                    return Ok(Err(format!(
                        "no primal solution: the model is {}",
                        status.label()
                    )));
                };
                match self.solver.check_slack(&self.model, outcome, name) {
                    Ok(s) => Ok(Ok((format!("slack of {name} = {s}"), vec![name.clone()]))),
                    Err(e) => Ok(Err(e.to_string())),
                }
            }
            repair => {
                let mut next = self.model.clone();
                let (msg, targets) = match apply_repair(&mut next, repair) {
                    Ok(r) => r,
                    Err(e) => return Ok(Err(e)),
                };
                let outcome = match self.solver.solve(&next) {
                    Ok(o) => o,
                    Err(e) => return Ok(Err(format!("change rejected, model unchanged: {e}"))),
                };
                self.model = next;
                self.outcome = Some(outcome);
                self.iis = None;
                self.iis_visible = false;
                Ok(Ok((msg, targets)))
            }
        }
    }

    fn after_repair(&mut self) -> Result<(), EnvError> {
        match self.current_status() {
            SolveStatus::Optimal => {
                self.pending.transition = Some(match self.phase {
                    Phase::Debug => "Entering Phase 2 (Rationality Oracle)".to_string(),
                    Phase::Validate => "Re-checking Rationality Oracle".to_string(),
                });
                self.phase = Phase::Validate;
                let v = self.run_oracle();
                self.pending.checks = true;
                if v.pass {
                    self.feedback = None;
                    self.verdict = Some(v);
                    self.finish(TerminalReason::Rational, None);
                } else {
                    self.feedback = Some(v.feedback.clone());
                    self.verdict = Some(v);
                    if self.loop_count < self.cfg.max_loops {
                        self.loop_count += 1;
                        self.phase = Phase::Debug;
                        self.pending.transition = Some(format!(
                            "Phase: VALIDATE -> DEBUG (loop-back {})",
                            self.loop_count
                        ));
                    } else {
                        self.finish(TerminalReason::LoopsExhausted, None);
                    }
                }
            }
            status => {
                self.phase = Phase::Debug;
                self.verdict = None;
                if status == SolveStatus::Infeasible && self.cfg.auto_iis {
                    self.ensure_iis()?;
                    self.iis_visible = true;
                }
            }
        }
        Ok(())
    }

    fn finish(&mut self, reason: TerminalReason, error: Option<String>) {
        let aborted = reason == TerminalReason::Aborted;
        let status = self.current_status();
        let verdict = match (&self.verdict, status) {
            (Some(v), SolveStatus::Optimal) => Some(v.clone()),
            (None, SolveStatus::Optimal) => Some(self.run_oracle()),
            _ => None,
        };
        let rational = !aborted && verdict.as_ref().is_some_and(|v| v.pass);
        let reward = if aborted {
            episode_reward(SolveStatus::Infeasible, false)
        } else {
            episode_reward(status, rational)
        };
        let comp = composite(&self.transcript, &self.problem.gt_iis, reward.outcome);
        self.result = Some(EpisodeResult {
            problem_id: self.problem.id.clone(),
            error_type: self.problem.error_type,
            agent: self.agent.clone(),
            final_status: status,
            rational,
            reward_outcome: reward.outcome,
            reward_rationality: reward.rationality,
            reward_total: reward.total,
            composite: comp,
            steps_used: self.step,
            loops_used: self.loop_count,
            token_count: self.tokens_reported.unwrap_or(self.tokens_estimated),
            tokens_reported: self.tokens_reported.is_some(),
            terminal_reason: reason,
            error,
            verdict,
            transcript: self.transcript.clone(),
        });
    }
}

fn resolve_rows(model: &Model, prefix: &str) -> Result<Vec<String>, String> {
    let rows = model.constraints_matching(prefix);
    if rows.is_empty() {
        let hints = near_misses(prefix, model.constraint_names(), 3);
        return Err(format!("no constraint matches `{prefix}`{}", suggest(&hints)));
    }
    Ok(rows)
}

fn suggest(hints: &[String]) -> String {
    if hints.is_empty() {
        String::new()
    } else {
        format!(" (did you mean {}?)", hints.join(", "))
    }
}

fn finite(v: f64, what: &str) -> Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("{what} must be finite, got {v}"))
    }
}

/// Applies one repair action to `model`, returning a message and the rows (or
/// variable) it touched. Diagnostic and meta actions are rejected.
pub fn apply_repair(model: &mut Model, action: &Action) -> Result<(String, Vec<String>), String> {
    match action {
        Action::RelaxConstraint { target, amount } => {
            finite(*amount, "relaxation amount")?;
            if *amount < 0.0 {
                return Err(format!("relaxation amount must be nonnegative, got {amount}"));
            }
            let rows = resolve_rows(model, target)?;
            let mut touched = Vec::new();
            for name in &rows {
                let c = model.constraint(name).expect("resolved").clone();
                match c.sense {
                    Sense::Le => {
                        model.constraint_mut(name).expect("resolved").rhs += amount;
                        touched.push(name.clone());
                    }
                    Sense::Ge => {
                        model.constraint_mut(name).expect("resolved").rhs -= amount;
                        touched.push(name.clone());
                    }
                    Sense::Eq => {
                        let ub = Constraint {
                            name: format!("{name}_ub"),
                            coeffs: c.coeffs.clone(),
                            sense: Sense::Le,
                            rhs: c.rhs + amount,
                        };
                        let lb = Constraint {
                            name: format!("{name}_lb"),
                            coeffs: c.coeffs,
                            sense: Sense::Ge,
                            rhs: c.rhs - amount,
                        };
                        touched.push(ub.name.clone());
                        touched.push(lb.name.clone());
                        model.replace_constraint(name, vec![ub, lb]).map_err(|e| e.to_string())?;
                    }
                }
            }
            Ok((format!("relaxed {} constraint(s) by {amount}", rows.len()), touched))
        }
        Action::DropConstraint { target } => {
            let rows = resolve_rows(model, target)?;
            for r in &rows {
                model.remove_constraint(r).map_err(|e| e.to_string())?;
            }
            Ok((format!("dropped {} constraint(s)", rows.len()), rows))
        }
        Action::UpdateRhs { target, value } => {
            finite(*value, "right-hand side")?;
            match model.constraint_mut(target) {
                Some(c) => {
                    let old = c.rhs;
                    c.rhs = *value;
                    Ok((format!("rhs of {target} changed from {old} to {value}"), vec![target.clone()]))
                }
                None => {
                    let hints = near_misses(target, model.constraint_names(), 3);
                    Err(format!("no constraint named `{target}`{}", suggest(&hints)))
                }
            }
        }
        Action::UpdateObj { target, value } => {
            finite(*value, "objective coefficient")?;
            let vars = model.variables_matching(target);
            if vars.is_empty() {
                let names: Vec<&str> = model.variables().map(|v| v.name.as_str()).collect();
                let hints = near_misses(target, names.into_iter(), 3);
                return Err(format!("no variable matches `{target}`{}", suggest(&hints)));
            }
            for v in &vars {
                model.variable_mut(v).expect("matched").objective = *value;
            }
            Ok((format!("objective coefficient set to {value} on {} variable(s)", vars.len()), vars))
        }
        Action::UpdateBounds { target, lower, upper } => {
            if lower > upper {
                return Err(format!("lower bound {lower} exceeds upper bound {upper}"));
            }
            if model.variable(target).is_none() {
                let names: Vec<&str> = model.variables().map(|v| v.name.as_str()).collect();
                let hints = near_misses(target, names.into_iter(), 3);
                return Err(format!("no variable named `{target}`{}", suggest(&hints)));
            }
            model.set_bounds(target, *lower, *upper).map_err(|e| e.to_string())?;
            Ok((format!("bounds of {target} set to [{lower}, {upper}]"), vec![target.clone()]))
        }
        other => Err(format!("{} does not modify the model", other.kind().name())),
    }
}
