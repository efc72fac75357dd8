use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Phase;
use crate::lp::SolveStatus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IisView {
    /// At most the display limit; `total` counts all members.
    pub constraints: Vec<String>,
    pub bounds: Vec<String>,
    pub total: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub n_constraints: usize,
    pub n_variables: usize,
    pub first_constraints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub action: String,
    pub ok: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryItem {
    pub step: usize,
    pub action: String,
    pub ok: bool,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub check: String,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub problem_id: String,
    pub nl_description: String,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub step: usize,
    pub step_budget: usize,
    pub phase: Phase,
    pub loop_count: usize,
    pub iis: Option<IisView>,
    pub model_summary: ModelSummary,
    pub last_action: Option<ActionReport>,
    /// Phase transition note for this step, e.g. entering validation.
    pub transition: Option<String>,
    pub rationality_feedback: Option<String>,
    /// Per-check results when the oracle ran on this step.
    pub checks: Option<Vec<CheckLine>>,
    pub history: Vec<HistoryItem>,
    pub done: bool,
    pub summary: Option<String>,
}

fn py_list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| format!("'{s}'")).collect();
    format!("[{}]", quoted.join(", "))
}

fn status_word(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "OPTIMAL",
        SolveStatus::Infeasible => "INFEASIBLE",
        SolveStatus::Unbounded => "UNBOUNDED",
    }
}

impl Observation {
    /// Plain-text rendering for text agents; carries the same content as the JSON form.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        if self.step == 0 {
            let _ = writeln!(s, "## Problem\n{}\n", self.nl_description.trim_end());
        }
        let _ = writeln!(s, "## Current State");
        let _ = writeln!(s, "- Solver Status: {}", status_word(self.status));
        let _ = writeln!(s, "- Step: {}", self.step);
        if let Some(obj) = self.objective {
            let _ = writeln!(s, "- Objective Value: {obj:.1}");
        }
        let _ = writeln!(s, "- Phase: {}", self.phase.label());
        if let Some(a) = &self.last_action {
            let _ = writeln!(s, "\n## Last Action\n- {}: {}", a.action, a.message);
        }
        if let Some(t) = &self.transition {
            let _ = writeln!(s, "\n-> {t}");
        }
        if let Some(iis) = &self.iis {
            let _ = writeln!(s, "\n## IIS (Irreducible Infeasible Subsystem)");
            let _ = writeln!(s, "- Conflicting Constraints: {}", py_list(&iis.constraints));
            let _ = writeln!(s, "- Conflicting Bounds: {}", py_list(&iis.bounds));
            if iis.truncated {
                let shown = iis.constraints.len() + iis.bounds.len();
                let _ = writeln!(s, "- ({} of {} members shown)", shown, iis.total);
            }
        }
        if let Some(checks) = &self.checks {
            let passed = self.rationality_feedback.is_none();
            let _ = writeln!(
                s,
                "\n## Rationality Check: {}",
                if passed { "PASSED" } else { "FAILED" }
            );
            for c in checks {
                let _ = writeln!(s, "- {}: {}", c.check, c.status);
            }
        }
        if let Some(f) = &self.rationality_feedback {
            let _ = writeln!(s, "\n## Rationality Feedback (from Phase 2 Oracle)\n{}", f.trim_end());
            let _ = writeln!(s, "\n## Closed-Loop Status");
            let _ = writeln!(s, "- Debug-Validate Loop: {}", self.loop_count);
        }
        let m = &self.model_summary;
        let _ = writeln!(s, "\n## Model Structure");
        let _ = writeln!(s, "- Total Constraints: {}", m.n_constraints);
        let _ = writeln!(s, "- Total Variables: {}", m.n_variables);
        let _ = writeln!(
            s,
            "- Constraint Names (first {}): {}",
            m.first_constraints.len(),
            py_list(&m.first_constraints)
        );
        if !self.history.is_empty() {
            let _ = writeln!(s, "\n## Recent History");
            for h in &self.history {
                let mark = if h.ok { "" } else { " [error]" };
                let _ = writeln!(s, "- Step {}: {}{} -> {}", h.step, h.action, mark, status_word(h.status));
            }
        }
        if self.done {
            let _ = writeln!(s, "\n{}", self.summary.as_deref().unwrap_or("Episode finished."));
        } else {
            let _ = writeln!(s, "\nWhat action should be taken next?");
        }
        s
    }
}
