//! Operational tightening, error injection, and sabotage verification.
//!
//! A sabotaged model is never stored: it is rebuilt from the instance, the
//! [`Tightening`] and the [`Perturbation`] recipe, so datasets and the
//! environment cannot drift apart.

mod kinds;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kinds::{Difficulty, ErrorType};

use crate::env::{Action, EnvConfig, Environment, Problem};
use crate::lp::{check_iis, compute_iis, LpError, ModelError, Sense, SolveStatus};
use crate::oracle::{evaluate, OracleConfig};
use crate::sc::{build_lp, names, ScError, ScInstance};
use crate::{Certificate, Model, Outcome, Solver};

/// Random redraws of one mechanism before it is declared inapplicable.
pub const MAX_DRAWS: usize = 20;
/// Rows touched by the windowed demand-propagation errors.
pub const WINDOW: usize = 4;

#[derive(Debug, Error)]
pub enum SaboteurError {
    #[error(transparent)]
    Solver(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Instance(#[from] ScError),
    #[error("tightening calibration: {0}")]
    Calibration(String),
    #[error("{error} is inapplicable to this instance: {reason}")]
    Inapplicable { error: ErrorType, reason: String },
    #[error("perturbation does not fit the model: {0}")]
    Replay(String),
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let p = 10f64.powi(decimals);
    (v * p).round() / p
}

/// Operational bounds calibrated to the baseline optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tightening {
    /// Per-echelon cap on backorders.
    pub backorder_cap: Vec<f64>,
    /// Cap on factory orders.
    pub supply_cap: f64,
}

pub const BACKORDER_MARGIN: f64 = 1.1;
pub const BACKORDER_FLOOR: f64 = 0.05;
pub const SUPPLY_MARGIN: f64 = 1.2;

impl Tightening {
    /// Backorder cap `max(1.1 max_t B*, 0.05 d̄)` per echelon, supply cap `1.2 max_t x*_N`.
    pub fn calibrate(inst: &ScInstance, baseline: &Outcome) -> Result<Self, SaboteurError> {
        if !baseline.is_optimal() {
            return Err(SaboteurError::Calibration(format!(
                "baseline is {}, not optimal",
                baseline.status
            )));
        }
        let (nn, tt) = (inst.n_echelons, inst.n_periods);
        let dbar = inst.mean_demand();
        let val = |name: String| baseline.value(&name).unwrap_or(0.0).max(0.0);
        let backorder_cap = (1..=nn)
            .map(|n| {
                let peak = (1..=tt).map(|t| val(names::back(n, t))).fold(0.0, f64::max);
                round_to((BACKORDER_MARGIN * peak).max(BACKORDER_FLOOR * dbar), 6)
            })
            .collect();
        let peak = (1..=tt).map(|t| val(names::order(nn, t))).fold(0.0, f64::max);
        Ok(Tightening {
            backorder_cap,
            supply_cap: round_to(SUPPLY_MARGIN * peak, 6),
        })
    }

    /// Appends `backorder_cap_*` and `supply_cap_*` rows.
    pub fn apply(&self, model: &mut Model, inst: &ScInstance) -> Result<(), SaboteurError> {
        let (nn, tt) = (inst.n_echelons, inst.n_periods);
        if self.backorder_cap.len() != nn {
            return Err(SaboteurError::Replay(format!(
                "{} backorder caps for {nn} echelons",
                self.backorder_cap.len()
            )));
        }
        for n in 1..=nn {
            for t in 1..=tt {
                model.add_constraint(
                    names::row(names::BACKORDER_CAP, n, t),
                    [(names::back(n, t), 1.0)],
                    Sense::Le,
                    self.backorder_cap[n - 1],
                )?;
            }
        }
        for t in 1..=tt {
            model.add_constraint(
                names::row(names::SUPPLY_CAP, nn, t),
                [(names::order(nn, t), 1.0)],
                Sense::Le,
                self.supply_cap,
            )?;
        }
        Ok(())
    }
}

/// Builds the base model, calibrates and applies the tightening, and checks
/// that the baseline optimum survives it.
pub fn tighten(inst: &ScInstance, solver: &Solver) -> Result<(Model, Tightening, Outcome), SaboteurError> {
    let base: Model = build_lp(inst)?;
    let baseline = solver.solve(&base)?;
    let tightening = Tightening::calibrate(inst, &baseline)?;
    let mut model = base;
    tightening.apply(&mut model, inst)?;
    let after = solver.solve(&model)?;
    match (after.objective, baseline.objective) {
        (Some(a), Some(b)) if (a - b).abs() <= 1e-6 * b.abs().max(1.0) => Ok((model, tightening, after)),
        _ => Err(SaboteurError::Calibration(format!(
            "tightened model is {} with objective {:?}, baseline {:?}",
            after.status, after.objective, baseline.objective
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsChange {
    pub row: String,
    pub original: f64,
    pub value: f64,
}

/// The exact change applied to the tightened model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// Constant offset on a window of demand-propagation rows.
    DemandOffset { echelon: usize, changes: Vec<RhsChange> },
    /// Arrival terms removed from every balance row of one echelon.
    ArrivalRemoval { echelon: usize },
    /// Extra balance row pinning `hold - back` to an unreachable value.
    BalanceTarget { echelon: usize, period: usize, row: String, value: f64 },
    /// Capacity rows of one echelon set to a new limit.
    CapacityCut { echelon: usize, original: f64, value: f64 },
    /// Holding-cost objective coefficients of one echelon inflated.
    HoldingInflation { echelon: usize, original: f64, value: f64 },
    /// Rows `x_{n,t} - x_{n-1,t-1} >= offset` for t = 2..T.
    BullwhipForce { echelon: usize, offset: f64 },
    /// Arrival coefficients of one echelon scaled from 1 to `factor`.
    ArrivalScale { echelon: usize, factor: f64 },
    /// Downstream-order coefficient in demand propagation negated.
    PropagationSign { echelon: usize },
    /// Factory minimum-order rows above the supply cap.
    MinOrder { echelon: usize, value: f64 },
    /// Window of demand-propagation rows reading the previous period, plus an offset.
    IndexShift { echelon: usize, changes: Vec<RhsChange> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SabotageTarget {
    pub echelon: usize,
    pub family: String,
    pub periods: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SabotageRecord {
    pub error_type: ErrorType,
    pub seed: u64,
    pub target: SabotageTarget,
    pub perturbation: Perturbation,
    pub ground_truth_fix: Vec<Action>,
    pub gt_iis: Certificate,
}

fn window_changes(family: &str, n: usize, start: usize, len: usize, value: f64) -> Vec<RhsChange> {
    (start..start + len)
        .map(|t| RhsChange {
            row: names::row(family, n, t),
            original: 0.0,
            value,
        })
        .collect()
}

/// Draws one recipe for `error`. Multipliers are rounded so recipes print exactly.
pub fn draw(
    error: ErrorType,
    inst: &ScInstance,
    tightening: &Tightening,
    rng: &mut ChaCha8Rng,
) -> Result<Perturbation, SaboteurError> {
    let (nn, tt) = (inst.n_echelons, inst.n_periods);
    let dbar = inst.mean_demand();
    let upstream = |rng: &mut ChaCha8Rng| rng.gen_range(2..=nn);
    let inapplicable = |reason: &str| SaboteurError::Inapplicable {
        error,
        reason: reason.to_string(),
    };
    if nn < 2 && !matches!(error, ErrorType::ME2 | ErrorType::ME3 | ErrorType::ME4 | ErrorType::ME7 | ErrorType::ME9) {
        return Err(inapplicable("needs at least two echelons"));
    }
    Ok(match error {
        ErrorType::ME1 => {
            let n = upstream(rng);
            let w = WINDOW.min(tt);
            let start = rng.gen_range(1..=tt - w + 1);
            let offset = round_to(rng.gen_range(3.0..=6.0) * dbar, 1);
            Perturbation::DemandOffset {
                echelon: n,
                changes: window_changes(names::DEMAND_PROP, n, start, w, offset),
            }
        }
        ErrorType::ME2 => {
            let candidates: Vec<usize> = (1..=nn).filter(|&n| inst.lead_time[n - 1] >= 1).collect();
            if candidates.is_empty() {
                return Err(inapplicable("every lead time is zero"));
            }
            Perturbation::ArrivalRemoval {
                echelon: candidates[rng.gen_range(0..candidates.len())],
            }
        }
        ErrorType::ME3 => {
            let n = rng.gen_range(1..=nn);
            let t = rng.gen_range(1..=tt);
            let value = -round_to(2.0 * dbar + inst.total_initial_inventory() + tightening.backorder_cap[n - 1], 1) - 1.0;
            Perturbation::BalanceTarget {
                echelon: n,
                period: t,
                row: format!("{}_target", names::row(names::INV_BALANCE, n, t)),
                value,
            }
        }
        ErrorType::ME4 => Perturbation::CapacityCut {
            echelon: 1,
            original: inst.capacity[0],
            value: round_to(rng.gen_range(0.02..=0.1) * dbar, 2).max(0.01),
        },
        ErrorType::ME5 => {
            let n = upstream(rng);
            Perturbation::HoldingInflation {
                echelon: n,
                original: inst.holding_cost[n - 1],
                value: round_to(rng.gen_range(1.5..=3.0) * inst.holding_cost[n - 2], 2),
            }
        }
        ErrorType::ME6 => {
            let n = upstream(rng);
            let mut cap = inst.capacity[n - 1];
            if n == nn {
                cap = cap.min(tightening.supply_cap);
            }
            let headroom = (cap - dbar).max(0.1 * dbar);
            Perturbation::BullwhipForce {
                echelon: n,
                offset: round_to(rng.gen_range(1.1..=1.5) * headroom, 1),
            }
        }
        ErrorType::ME7 => {
            let candidates: Vec<usize> = (1..=nn).filter(|&n| inst.lead_time[n - 1] < tt).collect();
            if candidates.is_empty() {
                return Err(inapplicable("no arrival terms inside the horizon"));
            }
            Perturbation::ArrivalScale {
                echelon: candidates[rng.gen_range(0..candidates.len())],
                factor: round_to(rng.gen_range(0.05..=0.2), 3),
            }
        }
        ErrorType::ME8 => Perturbation::PropagationSign { echelon: upstream(rng) },
        ErrorType::ME9 => Perturbation::MinOrder {
            echelon: nn,
            value: round_to(rng.gen_range(1.1..=1.5) * tightening.supply_cap, 1),
        },
        ErrorType::ME10 => {
            let n = upstream(rng);
            let w = WINDOW.min(tt - 1);
            let start = rng.gen_range(2..=tt - w + 1);
            let offset = round_to(rng.gen_range(2.0..=4.0) * dbar, 1);
            Perturbation::IndexShift {
                echelon: n,
                changes: window_changes(names::DEMAND_PROP, n, start, w, offset),
            }
        }
    })
}

fn row_mut<'a>(model: &'a mut Model, name: &str) -> Result<&'a mut crate::lp::Constraint<f64>, SaboteurError> {
    model
        .constraint_mut(name)
        .ok_or_else(|| SaboteurError::Replay(format!("missing row {name}")))
}

fn arrival_rows(inst: &ScInstance, n: usize) -> impl Iterator<Item = (String, String)> {
    let lead = inst.lead_time[n - 1];
    (lead + 1..=inst.n_periods).map(move |t| (names::row(names::INV_BALANCE, n, t), names::order(n, t - lead)))
}

/// Applies a recipe to the tightened model.
pub fn apply_perturbation(model: &mut Model, inst: &ScInstance, p: &Perturbation) -> Result<(), SaboteurError> {
    let tt = inst.n_periods;
    match p {
        Perturbation::DemandOffset { changes, .. } => {
            for c in changes {
                row_mut(model, &c.row)?.rhs = c.value;
            }
        }
        Perturbation::ArrivalRemoval { echelon } => {
            for (row, var) in arrival_rows(inst, *echelon) {
                row_mut(model, &row)?.coeffs.shift_remove(&var);
            }
        }
        Perturbation::BalanceTarget { echelon, period, row, value } => {
            let orig_name = names::row(names::INV_BALANCE, *echelon, *period);
            let orig = model
                .constraint(&orig_name)
                .cloned()
                .ok_or_else(|| SaboteurError::Replay(format!("missing row {orig_name}")))?;
            let mut target = orig.clone();
            target.name = row.clone();
            target.coeffs = [
                (names::hold(*echelon, *period), 1.0),
                (names::back(*echelon, *period), -1.0),
            ]
            .into_iter()
            .collect();
            target.sense = Sense::Eq;
            target.rhs = *value;
            model.replace_constraint(&orig_name, vec![orig, target])?;
        }
        Perturbation::CapacityCut { echelon, value, .. } => {
            for t in 1..=tt {
                row_mut(model, &names::row(names::CAPACITY, *echelon, t))?.rhs = *value;
            }
        }
        Perturbation::HoldingInflation { echelon, value, .. } => {
            for t in 1..=tt {
                let v = names::hold(*echelon, t);
                model
                    .variable_mut(&v)
                    .ok_or_else(|| SaboteurError::Replay(format!("missing variable {v}")))?
                    .objective = *value;
            }
        }
        Perturbation::BullwhipForce { echelon, offset } => {
            for t in 2..=tt {
                model.add_constraint(
                    names::row(names::BULLWHIP_FORCE, *echelon, t),
                    [(names::order(*echelon, t), 1.0), (names::order(echelon - 1, t - 1), -1.0)],
                    Sense::Ge,
                    *offset,
                )?;
            }
        }
        Perturbation::ArrivalScale { echelon, factor } => {
            for (row, var) in arrival_rows(inst, *echelon) {
                let r = row_mut(model, &row)?;
                let c = r
                    .coeffs
                    .get_mut(&var)
                    .ok_or_else(|| SaboteurError::Replay(format!("{row} has no {var}")))?;
                *c = -factor;
            }
        }
        Perturbation::PropagationSign { echelon } => {
            for t in 1..=tt {
                let row = names::row(names::DEMAND_PROP, *echelon, t);
                let var = names::order(echelon - 1, t);
                let r = row_mut(model, &row)?;
                let c = r
                    .coeffs
                    .get_mut(&var)
                    .ok_or_else(|| SaboteurError::Replay(format!("{row} has no {var}")))?;
                *c = -*c;
            }
        }
        Perturbation::MinOrder { echelon, value } => {
            for t in 1..=tt {
                model.add_constraint(
                    names::row(names::MIN_ORDER, *echelon, t),
                    [(names::order(*echelon, t), 1.0)],
                    Sense::Ge,
                    *value,
                )?;
            }
        }
        Perturbation::IndexShift { echelon, changes } => {
            for c in changes {
                let (_, _, t) = names::parse_row(&c.row).ok_or_else(|| SaboteurError::Replay(c.row.clone()))?;
                let t = t.filter(|&t| t >= 2).ok_or_else(|| SaboteurError::Replay(c.row.clone()))?;
                let r = row_mut(model, &c.row)?;
                r.coeffs.shift_remove(&names::order(echelon - 1, t));
                r.coeffs.insert(names::order(echelon - 1, t - 1), -1.0);
                r.rhs = c.value;
            }
        }
    }
    Ok(())
}

pub fn error_type_of(p: &Perturbation) -> ErrorType {
    match p {
        Perturbation::DemandOffset { .. } => ErrorType::ME1,
        Perturbation::ArrivalRemoval { .. } => ErrorType::ME2,
        Perturbation::BalanceTarget { .. } => ErrorType::ME3,
        Perturbation::CapacityCut { .. } => ErrorType::ME4,
        Perturbation::HoldingInflation { .. } => ErrorType::ME5,
        Perturbation::BullwhipForce { .. } => ErrorType::ME6,
        Perturbation::ArrivalScale { .. } => ErrorType::ME7,
        Perturbation::PropagationSign { .. } => ErrorType::ME8,
        Perturbation::MinOrder { .. } => ErrorType::ME9,
        Perturbation::IndexShift { .. } => ErrorType::ME10,
    }
}

pub fn target_of(p: &Perturbation, inst: &ScInstance) -> SabotageTarget {
    let all: Vec<usize> = (1..=inst.n_periods).collect();
    let window = |changes: &[RhsChange]| -> Vec<usize> {
        changes
            .iter()
            .filter_map(|c| names::parse_row(&c.row).and_then(|(_, _, t)| t))
            .collect()
    };
    let (echelon, family, periods) = match p {
        Perturbation::DemandOffset { echelon, changes } | Perturbation::IndexShift { echelon, changes } => {
            (*echelon, names::DEMAND_PROP, window(changes))
        }
        Perturbation::ArrivalRemoval { echelon } | Perturbation::ArrivalScale { echelon, .. } => {
            let lead = inst.lead_time[echelon - 1];
            (*echelon, names::INV_BALANCE, (lead + 1..=inst.n_periods).collect())
        }
        Perturbation::BalanceTarget { echelon, period, .. } => (*echelon, names::INV_BALANCE, vec![*period]),
        Perturbation::CapacityCut { echelon, .. } => (*echelon, names::CAPACITY, all),
        Perturbation::HoldingInflation { echelon, .. } => (*echelon, "hold", all),
        Perturbation::BullwhipForce { echelon, .. } => (*echelon, names::BULLWHIP_FORCE, all[1..].to_vec()),
        Perturbation::PropagationSign { echelon } => (*echelon, names::DEMAND_PROP, all),
        Perturbation::MinOrder { echelon, .. } => (*echelon, names::MIN_ORDER, all),
    };
    SabotageTarget {
        echelon,
        family: family.to_string(),
        periods,
    }
}

/// The repair script, in the environment's action vocabulary.
pub fn ground_truth_fix(p: &Perturbation) -> Vec<Action> {
    let drop = |family: &str, n: usize| {
        vec![Action::DropConstraint {
            target: names::echelon_prefix(family, n),
        }]
    };
    match p {
        Perturbation::DemandOffset { changes, .. } | Perturbation::IndexShift { changes, .. } => changes
            .iter()
            .map(|c| Action::UpdateRhs {
                target: c.row.clone(),
                value: c.original,
            })
            .collect(),
        Perturbation::ArrivalRemoval { echelon } | Perturbation::ArrivalScale { echelon, .. } => {
            drop(names::INV_BALANCE, *echelon)
        }
        Perturbation::BalanceTarget { row, .. } => vec![Action::DropConstraint { target: row.clone() }],
        Perturbation::CapacityCut { echelon, original, value } => vec![Action::RelaxConstraint {
            target: names::echelon_prefix(names::CAPACITY, *echelon),
            amount: original - value,
        }],
        Perturbation::HoldingInflation { echelon, original, .. } => vec![Action::UpdateObj {
            target: format!("hold_e{echelon}"),
            value: *original,
        }],
        Perturbation::BullwhipForce { echelon, .. } => drop(names::BULLWHIP_FORCE, *echelon),
        Perturbation::PropagationSign { echelon } => drop(names::DEMAND_PROP, *echelon),
        Perturbation::MinOrder { echelon, .. } => drop(names::MIN_ORDER, *echelon),
    }
}

/// Rebuilds the sabotaged model from its recipe.
pub fn rebuild(inst: &ScInstance, tightening: &Tightening, p: &Perturbation) -> Result<Model, SaboteurError> {
    let mut model: Model = build_lp(inst)?;
    tightening.apply(&mut model, inst)?;
    apply_perturbation(&mut model, inst, p)?;
    Ok(model)
}

/// True when the sabotaged model shows the intended symptom.
fn symptomatic(
    error: ErrorType,
    model: &Model,
    outcome: &Outcome,
    inst: &ScInstance,
    oracle: &OracleConfig,
) -> bool {
    if error.keeps_feasibility() {
        outcome.is_optimal()
            && evaluate(model, outcome, inst, error, oracle).is_ok_and(|v| !v.pass)
    } else {
        outcome.status == SolveStatus::Infeasible
    }
}

/// Injects `error` into the tightened model, redrawing up to [`MAX_DRAWS`]
/// times until the model shows the intended symptom.
pub fn inject(
    tightened: &Model,
    inst: &ScInstance,
    tightening: &Tightening,
    error: ErrorType,
    seed: u64,
    solver: &Solver,
    oracle: &OracleConfig,
) -> Result<(Model, SabotageRecord), SaboteurError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let p = draw(error, inst, tightening, &mut rng)?;
        let mut model = tightened.clone();
        apply_perturbation(&mut model, inst, &p)?;
        let outcome = solver.solve(&model)?;
        if !symptomatic(error, &model, &outcome, inst, oracle) {
            continue;
        }
        let gt_iis = if outcome.status == SolveStatus::Infeasible {
            compute_iis(&model, &solver.options)?
        } else {
            Certificate::default()
        };
        let record = SabotageRecord {
            error_type: error,
            seed,
            target: target_of(&p, inst),
            ground_truth_fix: ground_truth_fix(&p),
            perturbation: p,
            gt_iis,
        };
        return Ok((model, record));
    }
    Err(SaboteurError::Inapplicable {
        error,
        reason: format!("no draw out of {MAX_DRAWS} produced the intended symptom"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub status: SolveStatus,
    /// Infeasible (or optimal but irrational for ME5).
    pub status_ok: bool,
    /// Non-empty certificate where one is required, empty for ME5.
    pub iis_ok: bool,
    /// The stored certificate matches a fresh computation and is irreducible.
    pub iis_valid: bool,
    pub replay_reward: f64,
    pub replay_steps: usize,
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

/// Re-checks a sabotaged model end to end: status, certificate, and a
/// ground-truth replay through the environment that must earn +150.
pub fn verify(
    model: &Model,
    inst: &ScInstance,
    record: &SabotageRecord,
    nl_description: &str,
    env_cfg: &EnvConfig,
) -> Result<Verification, SaboteurError> {
    let solver = Solver::new(env_cfg.solver);
    let mut diagnostics = Vec::new();
    let error = record.error_type;
    let outcome = solver.solve(model)?;
    let status_ok = symptomatic(error, model, &outcome, inst, &env_cfg.oracle);
    if !status_ok {
        diagnostics.push(format!("sabotaged model is {} without the expected symptom", outcome.status));
    }
    let (iis_ok, iis_valid) = if error.keeps_feasibility() {
        let ok = record.gt_iis.is_empty();
        if !ok {
            diagnostics.push("a feasible sabotage must carry an empty certificate".into());
        }
        (ok, ok)
    } else if outcome.status == SolveStatus::Infeasible {
        let fresh = compute_iis(model, &solver.options)?;
        let same = fresh == record.gt_iis;
        let check = check_iis(model, &record.gt_iis, &solver.options)?;
        if !same {
            diagnostics.push("stored certificate differs from a fresh computation".into());
        }
        if !check.is_valid_iis() {
            diagnostics.push(format!("certificate is not an IIS: {check:?}"));
        }
        let nonempty = !record.gt_iis.is_empty();
        if !nonempty {
            diagnostics.push("empty certificate for an infeasible model".into());
        }
        (nonempty, same && check.is_valid_iis())
    } else {
        (false, false)
    };
    let problem = Problem {
        id: "verify".into(),
        error_type: error,
        nl_description: nl_description.to_string(),
        instance: inst.clone(),
        model: model.clone(),
        gt_iis: record.gt_iis.clone(),
    };
    let mut env = Environment::new(problem, env_cfg.clone());
    env.set_agent_label("gt");
    env.reset().map_err(|e| SaboteurError::Replay(e.to_string()))?;
    for a in record.ground_truth_fix.iter().cloned().chain([Action::Submit]) {
        if env.is_done() {
            break;
        }
        env.step(a).map_err(|e| SaboteurError::Replay(e.to_string()))?;
    }
    let result = env.result().expect("submit ends the episode");
    if result.reward_total != 150.0 {
        diagnostics.push(format!(
            "ground-truth replay ended {} with reward {} ({:?})",
            result.final_status.label(),
            result.reward_total,
            result.verdict.as_ref().map(|v| v.feedback.clone())
        ));
    }
    Ok(Verification {
        status: outcome.status,
        status_ok,
        iis_ok,
        iis_valid,
        replay_reward: result.reward_total,
        replay_steps: result.steps_used,
        passed: status_ok && iis_ok && iis_valid && result.reward_total == 150.0,
        diagnostics,
    })
}
