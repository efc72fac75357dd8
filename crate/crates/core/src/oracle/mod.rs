//! Operational rationality checks for feasible solutions.

pub mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::SolveStatus;
use crate::sc::{echelon_role, holding_monotone, names, ScInstance};
use crate::saboteur::ErrorType;
use crate::{Model, Outcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("rationality checks need an optimal solution, got {0}")]
    NotOptimal(SolveStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    BaseStock,
    Bullwhip,
    InventoryAllocation,
    CostConsistency,
    OrderSmoothing,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::BaseStock,
        Check::Bullwhip,
        Check::InventoryAllocation,
        Check::CostConsistency,
        Check::OrderSmoothing,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Check::BaseStock => "Base-stock rationality",
            Check::Bullwhip => "Bullwhip control",
            Check::InventoryAllocation => "Inventory allocation",
            Check::CostConsistency => "Cost consistency",
            Check::OrderSmoothing => "Order smoothing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
    SkippedDegenerate,
}

impl CheckStatus {
    pub fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "N/A",
            CheckStatus::SkippedDegenerate => "SKIPPED (degenerate)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchelonStat {
    pub echelon: usize,
    /// The computed statistic; `None` when the echelon was degenerate.
    pub value: Option<f64>,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: Check,
    pub status: CheckStatus,
    pub per_echelon: Vec<EchelonStat>,
    /// Violation prose; empty unless the check failed.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub tau_bs: f64,
    pub tau_bw: f64,
    pub tau_ia: f64,
    pub tau_os: f64,
    pub cost_tolerance: f64,
    pub eps_div: f64,
    /// Upstream inventory below this fraction of mean demand counts as none.
    pub alloc_fraction: f64,
    pub applicability: BTreeMap<ErrorType, Vec<Check>>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        use Check::*;
        let full = vec![BaseStock, InventoryAllocation, CostConsistency];
        let applicability = ErrorType::ALL
            .into_iter()
            .map(|e| {
                let checks = match e {
                    ErrorType::ME5 | ErrorType::ME7 | ErrorType::ME8 => vec![CostConsistency],
                    ErrorType::ME6 => vec![OrderSmoothing],
                    _ => full.clone(),
                };
                (e, checks)
            })
            .collect();
        OracleConfig {
            tau_bs: 2.0,
            tau_bw: 3.0,
            tau_ia: 0.25,
            tau_os: 5.0,
            cost_tolerance: 0.01,
            eps_div: 1e-9,
            alloc_fraction: 0.01,
            applicability,
        }
    }
}

impl OracleConfig {
    pub fn applies(&self, error: ErrorType, check: Check) -> bool {
        self.applicability.get(&error).is_some_and(|c| c.contains(&check))
    }
}

fn role(n: usize, total: usize) -> String {
    format!("Echelon {n} ({})", echelon_role(n, total))
}

fn overall(per: &[EchelonStat]) -> CheckStatus {
    if per.iter().any(|s| s.status == CheckStatus::Fail) {
        CheckStatus::Fail
    } else if !per.is_empty() && per.iter().all(|s| s.status == CheckStatus::SkippedDegenerate) {
        CheckStatus::SkippedDegenerate
    } else {
        CheckStatus::Pass
    }
}

/// Coefficient of variation of on-hand inventory per echelon (`inventory[n-1][t-1]`).
pub fn check_base_stock(inventory: &[Vec<f64>], cfg: &OracleConfig) -> CheckResult {
    let total = inventory.len();
    let per: Vec<EchelonStat> = inventory
        .iter()
        .enumerate()
        .map(|(i, traj)| match stats::coefficient_of_variation(traj, cfg.eps_div) {
            None => EchelonStat {
                echelon: i + 1,
                value: None,
                status: CheckStatus::SkippedDegenerate,
            },
            Some(cv) => EchelonStat {
                echelon: i + 1,
                value: Some(cv),
                status: if cv > cfg.tau_bs { CheckStatus::Fail } else { CheckStatus::Pass },
            },
        })
        .collect();
    let mut detail = String::new();
    for s in per.iter().filter(|s| s.status == CheckStatus::Fail) {
        let _ = write!(
            detail,
            "Base-stock rationality violated: inventory at {} fluctuates with a coefficient of variation of {:.2} (limit {}). ",
            role(s.echelon, total),
            s.value.unwrap_or_default(),
            cfg.tau_bs
        );
    }
    CheckResult {
        check: Check::BaseStock,
        status: overall(&per),
        per_echelon: per,
        detail: detail.trim_end().to_string(),
    }
}

/// Order variance over demand variance for echelons 2..N.
pub fn check_bullwhip(orders: &[Vec<f64>], demand: &[f64], cfg: &OracleConfig) -> CheckResult {
    let total = orders.len();
    let var_d = stats::variance(demand);
    let per: Vec<EchelonStat> = orders
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, x)| {
            if var_d < cfg.eps_div {
                return EchelonStat {
                    echelon: i + 1,
                    value: None,
                    status: CheckStatus::SkippedDegenerate,
                };
            }
            let r = stats::variance(x) / var_d;
            EchelonStat {
                echelon: i + 1,
                value: Some(r),
                status: if r > cfg.tau_bw { CheckStatus::Fail } else { CheckStatus::Pass },
            }
        })
        .collect();
    let mut detail = String::new();
    for s in per.iter().filter(|s| s.status == CheckStatus::Fail) {
        let _ = write!(
            detail,
            "Bullwhip control violated: order variance at {} is {:.2} times the customer demand variance (limit {}). ",
            role(s.echelon, total),
            s.value.unwrap_or_default(),
            cfg.tau_bw
        );
    }
    CheckResult {
        check: Check::Bullwhip,
        status: overall(&per),
        per_echelon: per,
        detail: detail.trim_end().to_string(),
    }
}

/// Flags retail stock that is large relative to demand while nothing is held upstream.
/// The per-echelon entries carry each echelon's mean inventory.
pub fn check_inventory_allocation(
    inventory: &[Vec<f64>],
    mean_demand: f64,
    holding: &[f64],
    cfg: &OracleConfig,
) -> CheckResult {
    let means: Vec<f64> = inventory.iter().map(|t| stats::mean(t)).collect();
    let retail = means.first().copied().unwrap_or(0.0);
    let upstream: f64 = means.iter().skip(1).sum();
    let fail = retail > cfg.tau_ia * mean_demand && upstream < cfg.alloc_fraction * mean_demand;
    let status = if fail { CheckStatus::Fail } else { CheckStatus::Pass };
    let per = means
        .iter()
        .enumerate()
        .map(|(i, &m)| EchelonStat {
            echelon: i + 1,
            value: Some(m),
            status,
        })
        .collect();
    let detail = if fail {
        let h1 = holding.first().copied().unwrap_or(f64::NAN);
        format!(
            "Inventory allocation violated: {} (h={h1}) holds {retail:.1} units on average while all upstream echelons together hold {upstream:.1}; retail stock above {} x mean demand ({:.1}) with nothing buffered upstream.",
            role(1, inventory.len()),
            cfg.tau_ia,
            cfg.tau_ia * mean_demand
        )
    } else {
        String::new()
    };
    CheckResult {
        check: Check::InventoryAllocation,
        status,
        per_echelon: per,
        detail,
    }
}

fn rel_deviation(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
}

/// (a) configured holding costs fall upstream; (b) every holding and
/// backorder objective coefficient in the model matches the configuration.
/// Per-echelon entries carry the largest relative coefficient deviation.
pub fn check_cost_consistency(model: &Model, inst: &ScInstance, cfg: &OracleConfig) -> CheckResult {
    let mut detail = String::new();
    let mut fail = false;
    let h = &inst.holding_cost;
    if !holding_monotone(h, cfg.cost_tolerance) {
        fail = true;
        for (i, w) in h.windows(2).enumerate() {
            if w[1] > w[0] * (1.0 + cfg.cost_tolerance) {
                let _ = write!(
                    detail,
                    "Cost consistency violated: configured holding cost rises upstream (h_{}={} > h_{}={}). ",
                    i + 2,
                    w[1],
                    i + 1,
                    w[0]
                );
            }
        }
    }
    let mut per = Vec::with_capacity(inst.n_echelons);
    for n in 1..=inst.n_echelons {
        let mut worst = 0.0f64;
        let mut reported = false;
        let specs = [
            ("hold", inst.holding_cost[n - 1], names::hold as fn(usize, usize) -> String),
            ("back", inst.backorder_cost[n - 1], names::back),
        ];
        for (stem, expected, name) in specs {
            for t in 1..=inst.n_periods {
                let Some(v) = model.variable(&name(n, t)) else {
                    continue;
                };
                let dev = rel_deviation(v.objective, expected);
                worst = worst.max(dev);
                if dev > cfg.cost_tolerance && !reported {
                    reported = true;
                    let _ = write!(
                        detail,
                        "Cost consistency violated: the objective coefficient of {stem}_e{n} is {} but the configuration specifies {expected}. ",
                        v.objective
                    );
                }
            }
        }
        let status = if worst > cfg.cost_tolerance {
            fail = true;
            CheckStatus::Fail
        } else {
            CheckStatus::Pass
        };
        per.push(EchelonStat {
            echelon: n,
            value: Some(worst),
            status,
        });
    }
    CheckResult {
        check: Check::CostConsistency,
        status: if fail { CheckStatus::Fail } else { CheckStatus::Pass },
        per_echelon: per,
        detail: detail.trim_end().to_string(),
    }
}

/// Largest period-to-period order change relative to mean orders; the
/// threshold itself already counts as a violation.
pub fn check_order_smoothing(orders: &[Vec<f64>], cfg: &OracleConfig) -> CheckResult {
    let total = orders.len();
    let per: Vec<EchelonStat> = orders
        .iter()
        .enumerate()
        .map(|(i, x)| match stats::max_jump_ratio(x, cfg.eps_div) {
            None => EchelonStat {
                echelon: i + 1,
                value: None,
                status: CheckStatus::SkippedDegenerate,
            },
            Some(r) => EchelonStat {
                echelon: i + 1,
                value: Some(r),
                status: if r < cfg.tau_os { CheckStatus::Pass } else { CheckStatus::Fail },
            },
        })
        .collect();
    let mut detail = String::new();
    for s in per.iter().filter(|s| s.status == CheckStatus::Fail) {
        let _ = write!(
            detail,
            "Order smoothing violated: orders at {} change by {:.2} times their mean within one period (limit {}). ",
            role(s.echelon, total),
            s.value.unwrap_or_default(),
            cfg.tau_os
        );
    }
    CheckResult {
        check: Check::OrderSmoothing,
        status: overall(&per),
        per_echelon: per,
        detail: detail.trim_end().to_string(),
    }
}

/// Inventory and order trajectories, indexed `[n-1][t-1]`; missing variables read as zero.
pub fn trajectories(outcome: &Outcome, inst: &ScInstance) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let get = |name: String| outcome.value(&name).unwrap_or(0.0);
    let inv = (1..=inst.n_echelons)
        .map(|n| (1..=inst.n_periods).map(|t| get(names::hold(n, t))).collect())
        .collect();
    let ord = (1..=inst.n_echelons)
        .map(|n| (1..=inst.n_periods).map(|t| get(names::order(n, t))).collect())
        .collect();
    (inv, ord)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalityVerdict {
    pub error_type: ErrorType,
    /// One entry per check in [`Check::ALL`] order.
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub feedback: String,
}

impl RationalityVerdict {
    pub fn result(&self, check: Check) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == check)
    }

    /// Pass/fail listing in the order of [`Check::ALL`].
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "- {}: {}", c.check.label(), c.status.label());
        }
        s
    }
}

pub const FEEDBACK_CLOSING: &str = "The solver found a feasible solution, but it failed rationality checks. \
Correct the modeling issue named above and keep the model feasible.";

/// Combines raw check results under the applicability map: excluded checks are
/// reported as not applicable and never affect the verdict.
pub fn combine(raw: Vec<CheckResult>, error: ErrorType, cfg: &OracleConfig) -> RationalityVerdict {
    let mut checks = Vec::with_capacity(Check::ALL.len());
    for check in Check::ALL {
        let r = raw.iter().find(|r| r.check == check).cloned();
        let r = match r {
            Some(r) if cfg.applies(error, check) => r,
            _ => CheckResult {
                check,
                status: CheckStatus::NotApplicable,
                per_echelon: Vec::new(),
                detail: String::new(),
            },
        };
        checks.push(r);
    }
    let failing: Vec<&CheckResult> = checks.iter().filter(|c| c.status == CheckStatus::Fail).collect();
    let pass = failing.is_empty();
    let feedback = if pass {
        String::new()
    } else {
        let mut f = String::new();
        for c in failing {
            f.push_str(&c.detail);
            f.push('\n');
        }
        f.push('\n');
        f.push_str(FEEDBACK_CLOSING);
        f
    };
    RationalityVerdict {
        error_type: error,
        checks,
        pass,
        feedback,
    }
}

pub fn evaluate(
    model: &Model,
    outcome: &Outcome,
    inst: &ScInstance,
    error: ErrorType,
    cfg: &OracleConfig,
) -> Result<RationalityVerdict, OracleError> {
    if outcome.status != SolveStatus::Optimal {
        return Err(OracleError::NotOptimal(outcome.status));
    }
    let (inv, ord) = trajectories(outcome, inst);
    let raw = Check::ALL
        .into_iter()
        .filter(|&c| cfg.applies(error, c))
        .map(|c| match c {
            Check::BaseStock => check_base_stock(&inv, cfg),
            Check::Bullwhip => check_bullwhip(&ord, &inst.demand, cfg),
            Check::InventoryAllocation => {
                check_inventory_allocation(&inv, inst.mean_demand(), &inst.holding_cost, cfg)
            }
            Check::CostConsistency => check_cost_consistency(model, inst, cfg),
            Check::OrderSmoothing => check_order_smoothing(&ord, cfg),
        })
        .collect();
    Ok(combine(raw, error, cfg))
}
