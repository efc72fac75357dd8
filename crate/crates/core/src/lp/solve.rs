use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{LpModel, ModelError};
use super::simplex::{self, PivotRule, RawOutcome, SimplexError, StandardForm, Tolerances};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("numerically pathological model: |{location}| = {value} exceeds the cap {cap}")]
    Pathological {
        location: String,
        value: String,
        cap: String,
    },
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("unknown constraint `{name}`{}", suggestion_suffix(.suggestions))]
    UnknownConstraint {
        name: String,
        suggestions: Vec<String>,
    },
    #[error("IIS requested for a model that is not infeasible")]
    NotInfeasible,
    #[error("slack requested without an optimal solution")]
    NotOptimal,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn suggestion_suffix(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("; did you mean one of: {}", s.join(", "))
    }
}

impl From<SimplexError> for LpError {
    fn from(e: SimplexError) -> Self {
        match e {
            SimplexError::IterationLimit(n) => LpError::IterationLimit(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::Infeasible => "INFEASIBLE",
            SolveStatus::Unbounded => "UNBOUNDED",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<S> {
    /// Absolute primal feasibility tolerance.
    pub feas_tol: S,
    /// Reduced-cost tolerance for optimality.
    pub opt_tol: S,
    pub pivot_tol: S,
    /// Bounds at or beyond this magnitude are treated as infinite.
    pub infinity: S,
    /// Finite entries above this magnitude are rejected before solving.
    pub max_abs_entry: S,
    pub max_iterations: usize,
    pub pivot_rule: PivotRule,
}

impl<S: Scalar> Default for SolverOptions<S> {
    fn default() -> Self {
        SolverOptions {
            // the f64 values, widened when the scalar's epsilon cannot resolve them
            feas_tol: S::of(1e-6).max(S::epsilon() * S::of(100.0)),
            opt_tol: S::of(1e-9).max(S::epsilon() * S::of(1e3)),
            pivot_tol: S::of(1e-9).max(S::epsilon() * S::of(1e3)),
            infinity: S::of(1e12),
            max_abs_entry: S::of(1e9),
            max_iterations: 200_000,
            pivot_rule: PivotRule::DantzigBlandFallback,
        }
    }
}

pub const ENV_FEAS_TOL: &str = "CHAINFIX_FEAS_TOL";
pub const ENV_OPT_TOL: &str = "CHAINFIX_OPT_TOL";
pub const ENV_PIVOT_RULE: &str = "CHAINFIX_PIVOT_RULE";

impl<S: Scalar> SolverOptions<S> {
    /// Defaults overridden by `CHAINFIX_FEAS_TOL`, `CHAINFIX_OPT_TOL` and
    /// `CHAINFIX_PIVOT_RULE` (`bland` | `dantzig`) when set and parseable.
    pub fn from_env() -> Self {
        let mut o = Self::default();
        let read = |k: &str| std::env::var(k).ok().and_then(|v| v.trim().parse::<f64>().ok());
        if let Some(v) = read(ENV_FEAS_TOL).filter(|v| *v > 0.0) {
            o.feas_tol = S::of(v);
        }
        if let Some(v) = read(ENV_OPT_TOL).filter(|v| *v > 0.0) {
            o.opt_tol = S::of(v);
        }
        if let Ok(rule) = std::env::var(ENV_PIVOT_RULE) {
            match rule.trim().to_ascii_lowercase().as_str() {
                "bland" => o.pivot_rule = PivotRule::Bland,
                "dantzig" => o.pivot_rule = PivotRule::DantzigBlandFallback,
                _ => {}
            }
        }
        o
    }

    pub(crate) fn tolerances(&self) -> Tolerances<S> {
        Tolerances {
            feas: self.feas_tol,
            opt: self.opt_tol,
            pivot: self.pivot_tol,
            max_iterations: self.max_iterations,
            rule: self.pivot_rule,
        }
    }
}

/// Result of a solve. Values are present iff the status is optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome<S> {
    pub status: SolveStatus,
    pub objective: Option<S>,
    pub primal: Option<IndexMap<String, S>>,
    pub slacks: Option<IndexMap<String, S>>,
}

impl<S: Scalar> SolveOutcome<S> {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, var: &str) -> Option<S> {
        self.primal.as_ref().and_then(|p| p.get(var).copied())
    }

    pub fn slack(&self, row: &str) -> Option<S> {
        self.slacks.as_ref().and_then(|s| s.get(row).copied())
    }
}

pub(crate) fn compile<S: Scalar>(
    model: &LpModel<S>,
    opts: &SolverOptions<S>,
) -> Result<StandardForm<S>, LpError> {
    let cap = opts.max_abs_entry;
    let inf = opts.infinity;
    let check = |loc: &dyn Fn() -> String, v: S| -> Result<(), LpError> {
        if v.is_nan() || (v.abs() > cap && v.abs() < inf) {
            return Err(LpError::Pathological {
                location: loc(),
                value: v.to_string(),
                cap: cap.to_string(),
            });
        }
        Ok(())
    };
    let n = model.n_variables();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut cost = Vec::with_capacity(n);
    for v in model.variables() {
        check(&|| format!("bound of {}", v.name), v.lower)?;
        check(&|| format!("bound of {}", v.name), v.upper)?;
        check(&|| format!("objective of {}", v.name), v.objective)?;
        if v.objective.abs() >= inf {
            return Err(LpError::Pathological {
                location: format!("objective of {}", v.name),
                value: v.objective.to_string(),
                cap: cap.to_string(),
            });
        }
        lower.push(if v.lower <= -inf { S::neg_infinity() } else { v.lower });
        upper.push(if v.upper >= inf { S::infinity() } else { v.upper });
        cost.push(v.objective);
    }
    let mut rows = Vec::with_capacity(model.n_constraints());
    let mut senses = Vec::with_capacity(model.n_constraints());
    let mut rhs = Vec::with_capacity(model.n_constraints());
    for c in model.constraints() {
        let mut row = Vec::with_capacity(c.coeffs.len());
        for (var, &a) in &c.coeffs {
            if a.abs() >= inf {
                return Err(LpError::Pathological {
                    location: format!("{} in {}", var, c.name),
                    value: a.to_string(),
                    cap: cap.to_string(),
                });
            }
            check(&|| format!("{} in {}", var, c.name), a)?;
            if a == S::zero() {
                continue;
            }
            let j = model
                .variable_index(var)
                .ok_or_else(|| ModelError::UnknownVariable {
                    constraint: c.name.clone(),
                    variable: var.clone(),
                })?;
            row.push((j, a));
        }
        check(&|| format!("rhs of {}", c.name), c.rhs)?;
        if !c.rhs.is_finite() || c.rhs.abs() >= inf {
            return Err(LpError::Pathological {
                location: format!("rhs of {}", c.name),
                value: c.rhs.to_string(),
                cap: cap.to_string(),
            });
        }
        rows.push(row);
        senses.push(c.sense);
        rhs.push(c.rhs);
    }
    Ok(StandardForm {
        n_struct: n,
        rows,
        senses,
        rhs,
        lower,
        upper,
        cost,
    })
}

/// Stateless LP solver; each call compiles the model afresh.
#[derive(Debug, Clone, Copy)]
pub struct Solver<S> {
    pub options: SolverOptions<S>,
}

impl<S: Scalar> Default for Solver<S> {
    fn default() -> Self {
        Solver {
            options: SolverOptions::default(),
        }
    }
}

impl<S: Scalar> Solver<S> {
    pub fn new(options: SolverOptions<S>) -> Self {
        Solver { options }
    }

    pub fn solve(&self, model: &LpModel<S>) -> Result<SolveOutcome<S>, LpError> {
        let sf = compile(model, &self.options)?;
        let raw = simplex::solve(&sf, self.options.tolerances())?;
        Ok(match raw {
            RawOutcome::Infeasible => SolveOutcome {
                status: SolveStatus::Infeasible,
                objective: None,
                primal: None,
                slacks: None,
            },
            RawOutcome::Unbounded => SolveOutcome {
                status: SolveStatus::Unbounded,
                objective: None,
                primal: None,
                slacks: None,
            },
            RawOutcome::Optimal { x, objective } => {
                let primal: IndexMap<String, S> = model
                    .variables()
                    .zip(&x)
                    .map(|(v, &val)| (v.name.clone(), val))
                    .collect();
                let slacks = model
                    .constraints()
                    .zip(&sf.rows)
                    .map(|(c, row)| {
                        let act = row.iter().fold(S::zero(), |acc, &(j, a)| acc + a * x[j]);
                        (c.name.clone(), c.slack_at(act))
                    })
                    .collect();
                SolveOutcome {
                    status: SolveStatus::Optimal,
                    objective: Some(objective),
                    primal: Some(primal),
                    slacks: Some(slacks),
                }
            }
        })
    }

    /// Slack of a named row at the optimum in `outcome`.
    pub fn check_slack(
        &self,
        model: &LpModel<S>,
        outcome: &SolveOutcome<S>,
        constraint: &str,
    ) -> Result<S, LpError> {
        check_slack(model, outcome, constraint)
    }

    /// Phase-one feasibility test.
    pub fn is_feasible(&self, model: &LpModel<S>) -> Result<bool, LpError> {
        let sf = compile(model, &self.options)?;
        Ok(simplex::feasibility(&sf, self.options.tolerances())?.is_none())
    }
}

pub fn check_slack<S: Scalar>(
    model: &LpModel<S>,
    outcome: &SolveOutcome<S>,
    constraint: &str,
) -> Result<S, LpError> {
    let Some(c) = model.constraint(constraint) else {
        return Err(LpError::UnknownConstraint {
            name: constraint.to_string(),
            suggestions: near_misses(constraint, model.constraint_names(), 3),
        });
    };
    let Some(primal) = outcome.primal.as_ref().filter(|_| outcome.is_optimal()) else {
        return Err(LpError::NotOptimal);
    };
    let act = c.activity(|v| primal.get(v).copied().unwrap_or_else(S::zero));
    Ok(c.slack_at(act))
}

/// Up to `k` candidate names closest to `name` by edit distance.
pub fn near_misses<'a>(name: &str, candidates: impl Iterator<Item = &'a str>, k: usize) -> Vec<String> {
    let mut scored: Vec<(usize, &str)> = candidates
        .map(|c| (strsim::levenshtein(name, c), c))
        .collect();
    scored.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().take(k).map(|(_, c)| c.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::model::Sense;

    fn inf() -> f64 {
        f64::INFINITY
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut m = LpModel::new();
        m.add_variable("x", 0.0, inf(), 1.0).unwrap();
        m.add_constraint("upper", [("x", 1.0)], Sense::Le, 5.0).unwrap();
        m.add_constraint("lower", [("x", 1.0)], Sense::Ge, 10.0).unwrap();
        let out = Solver::default().solve(&m).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(out.primal.is_none() && out.objective.is_none());
    }

    #[test]
    fn unbounded_ray() {
        let mut m = LpModel::new();
        m.add_variable("x", 0.0, inf(), -1.0).unwrap();
        let out = Solver::default().solve(&m).unwrap();
        assert_eq!(out.status, SolveStatus::Unbounded);
    }

    #[test]
    fn small_optimum_and_slacks() {
        // min -x - y  s.t. x + y <= 4, x <= 3, y >= 0.5
        let mut m = LpModel::new();
        m.add_variable("x", 0.0, inf(), -1.0).unwrap();
        m.add_variable("y", 0.0, inf(), -2.0).unwrap();
        m.add_constraint("sum", [("x", 1.0), ("y", 1.0)], Sense::Le, 4.0).unwrap();
        m.add_constraint("xcap", [("x", 1.0)], Sense::Le, 3.0).unwrap();
        m.add_constraint("ymin", [("y", 1.0)], Sense::Ge, 0.5).unwrap();
        let s = Solver::default();
        let out = s.solve(&m).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective.unwrap() + 8.0).abs() < 1e-9);
        assert!(s.check_slack(&m, &out, "sum").unwrap().abs() < 1e-9);
        assert!((s.check_slack(&m, &out, "xcap").unwrap() - 3.0).abs() < 1e-9);
        assert!((s.check_slack(&m, &out, "ymin").unwrap() - 3.5).abs() < 1e-9);
    }

    #[test]
    fn capacity_slack_arithmetic() {
        // order fixed at 480 against capacity 500
        let mut m = LpModel::new();
        m.add_variable("x_e1_t1", 480.0, 480.0, 0.0).unwrap();
        m.add_constraint("capacity_e1_t1", [("x_e1_t1", 1.0)], Sense::Le, 500.0)
            .unwrap();
        let s = Solver::<f64>::default();
        let out = s.solve(&m).unwrap();
        assert!((s.check_slack(&m, &out, "capacity_e1_t1").unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_row_lists_near_misses() {
        let mut m = LpModel::new();
        m.add_variable("x", 0.0, 1.0, 0.0).unwrap();
        m.add_constraint("capacity_e1_t1", [("x", 1.0)], Sense::Le, 1.0).unwrap();
        m.add_constraint("capacity_e1_t2", [("x", 1.0)], Sense::Le, 1.0).unwrap();
        let s = Solver::default();
        let out = s.solve(&m).unwrap();
        match s.check_slack(&m, &out, "capacity_e1_t") {
            Err(LpError::UnknownConstraint { suggestions, .. }) => {
                assert_eq!(suggestions[0], "capacity_e1_t1")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slack_needs_optimum() {
        let mut m = LpModel::new();
        m.add_variable("x", 0.0, inf(), 1.0).unwrap();
        m.add_constraint("a", [("x", 1.0)], Sense::Le, 5.0).unwrap();
        m.add_constraint("b", [("x", 1.0)], Sense::Ge, 10.0).unwrap();
        let out = Solver::default().solve(&m).unwrap();
        assert_eq!(check_slack(&m, &out, "a"), Err(LpError::NotOptimal));
    }

    #[test]
    fn rejects_pathological_coefficients() {
        let mut m = LpModel::new();
        m.add_variable("x", 0.0, inf(), 1.0).unwrap();
        m.add_constraint("big", [("x", 1e10)], Sense::Le, 5.0).unwrap();
        assert!(matches!(
            Solver::default().solve(&m),
            Err(LpError::Pathological { .. })
        ));
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y, x - y = 2, x + y >= 1, x,y free
        let mut m = LpModel::new();
        m.add_variable("x", f64::NEG_INFINITY, inf(), 1.0).unwrap();
        m.add_variable("y", f64::NEG_INFINITY, inf(), 1.0).unwrap();
        m.add_constraint("d", [("x", 1.0), ("y", -1.0)], Sense::Eq, 2.0).unwrap();
        m.add_constraint("s", [("x", 1.0), ("y", 1.0)], Sense::Ge, 1.0).unwrap();
        let out = Solver::default().solve(&m).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective.unwrap() - 1.0).abs() < 1e-9);
        assert!((out.value("x").unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn runs_in_single_precision() {
        let mut m = LpModel::<f32>::new();
        m.add_variable("x", 0.0, f32::INFINITY, 2.0).unwrap();
        m.add_constraint("floor", [("x", 1.0f32)], Sense::Ge, 3.0).unwrap();
        let out = Solver::<f32>::default().solve(&m).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective.unwrap() - 6.0).abs() < 1e-5);
    }
}
