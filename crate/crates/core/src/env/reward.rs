//! Episode reward and the composite score.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::action::ActionKind;
use super::TranscriptEntry;
use crate::lp::SolveStatus;
use crate::Certificate;

pub const R_OPTIMAL: f64 = 100.0;
pub const R_NOT_OPTIMAL: f64 = -50.0;
pub const R_RATIONAL: f64 = 50.0;
pub const R_IRRATIONAL: f64 = -25.0;
pub const FAITHFULNESS_PENALTY: f64 = -20.0;

pub const W_OUTCOME: f64 = 0.5;
pub const W_DIAGNOSIS: f64 = 0.3;
pub const W_EFFICIENCY: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reward {
    pub outcome: f64,
    pub rationality: f64,
    pub total: f64,
}

/// Outcome reward: `{+150, +75, -50}` for optimal-rational, optimal-irrational, anything else.
pub fn episode_reward(status: SolveStatus, rational: bool) -> Reward {
    let (outcome, rationality) = match (status, rational) {
        (SolveStatus::Optimal, true) => (R_OPTIMAL, R_RATIONAL),
        (SolveStatus::Optimal, false) => (R_OPTIMAL, R_IRRATIONAL),
        _ => (R_NOT_OPTIMAL, 0.0),
    };
    Reward {
        outcome,
        rationality,
        total: outcome + rationality,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Composite {
    pub r_outcome: f64,
    pub diagnosis_accuracy: f64,
    pub r_diagnosis: f64,
    pub repair_steps: usize,
    pub r_efficiency: f64,
    pub penalty: f64,
    pub total: f64,
}

/// Strips the `_ub` / `_lb` suffixes that relaxing an equality row introduces.
pub fn base_row_name(name: &str) -> &str {
    name.strip_suffix("_ub")
        .or_else(|| name.strip_suffix("_lb"))
        .unwrap_or(name)
}

/// Composite score of a finished transcript against the ground-truth IIS.
///
/// Diagnosis accuracy is the recall of ground-truth IIS rows among the rows
/// touched by repairs. The faithfulness penalty fires once if any repair
/// touched only rows (or a variable) outside the ground-truth IIS. Objective
/// updates are exempt from both.
pub fn composite(transcript: &[TranscriptEntry], gt: &Certificate, r_outcome: f64) -> Composite {
    let gt_rows: BTreeSet<&str> = gt.constraint_members.iter().map(String::as_str).collect();
    let gt_vars: BTreeSet<&str> = gt.bound_members.iter().map(|b| b.variable.as_str()).collect();
    let mut hit: BTreeSet<&str> = BTreeSet::new();
    let mut unfaithful = false;
    let mut repairs = 0usize;
    for e in transcript {
        let Some(kind) = e.kind else { continue };
        if !kind.is_repair() {
            continue;
        }
        repairs += 1;
        if e.expanded_targets.is_empty() || kind == ActionKind::UpdateObj || gt.is_empty() {
            continue;
        }
        if kind == ActionKind::UpdateBounds {
            if !e.expanded_targets.iter().any(|v| gt_vars.contains(v.as_str())) {
                unfaithful = true;
            }
            continue;
        }
        let mut any = false;
        for t in &e.expanded_targets {
            if let Some(g) = gt_rows.get(base_row_name(t)) {
                hit.insert(g);
                any = true;
            }
        }
        if !any {
            unfaithful = true;
        }
    }
    let da = if gt_rows.is_empty() {
        1.0
    } else {
        hit.len() as f64 / gt_rows.len() as f64
    };
    let r_diagnosis = da * 100.0;
    let r_efficiency = -(repairs as f64);
    let penalty = if unfaithful { FAITHFULNESS_PENALTY } else { 0.0 };
    Composite {
        r_outcome,
        diagnosis_accuracy: da,
        r_diagnosis,
        repair_steps: repairs,
        r_efficiency,
        penalty,
        total: W_OUTCOME * r_outcome + W_DIAGNOSIS * r_diagnosis + W_EFFICIENCY * r_efficiency + penalty,
    }
}
