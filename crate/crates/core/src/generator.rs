//! Random instance sampling, the acceptance filter, and the prose description.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpError, SolveOutcome, SolveStatus, Solver};
use crate::sc::{build_lp, demand_series, echelon_role, DemandPattern, ScError, ScInstance};
use crate::Model;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("no acceptable {what} after {tries} attempts")]
    Exhausted { what: &'static str, tries: usize },
    #[error(transparent)]
    Instance(#[from] ScError),
    #[error(transparent)]
    Solver(#[from] LpError),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Stationary,
    StepChange,
    Seasonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub echelons: Vec<usize>,
    pub periods: Vec<usize>,
    pub holding_cost: [f64; 2],
    pub backorder_cost: [f64; 2],
    /// Allowed `b / h` range per echelon.
    pub backorder_ratio: [f64; 2],
    pub capacity: [f64; 2],
    pub lead_times: Vec<usize>,
    /// Initial inventory as a multiple of the realized mean demand.
    pub initial_inventory: [f64; 2],
    pub demand_mean: [f64; 2],
    pub patterns: Vec<PatternKind>,
    /// Seasonal amplitude as a fraction of the mean.
    pub seasonal_amplitude: [f64; 2],
    /// Post-change mean as a multiple of the pre-change mean.
    pub step_ratio: [f64; 2],
    pub min_objective: f64,
    pub min_active_constraints: usize,
    pub max_retries: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            echelons: vec![2, 3, 4, 5],
            periods: vec![12, 16, 20, 24],
            holding_cost: [1.0, 10.0],
            backorder_cost: [5.0, 50.0],
            backorder_ratio: [2.0, 10.0],
            capacity: [50.0, 500.0],
            lead_times: vec![1, 2, 3],
            initial_inventory: [0.0, 2.0],
            demand_mean: [50.0, 200.0],
            patterns: vec![PatternKind::Stationary, PatternKind::StepChange, PatternKind::Seasonal],
            seasonal_amplitude: [0.2, 0.5],
            step_ratio: [0.5, 1.5],
            min_objective: 1.0,
            min_active_constraints: 10,
            max_retries: 1000,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn from_toml(text: &str) -> Result<Self, GeneratorError> {
        let cfg: GeneratorConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: String| Err(GeneratorError::Config(m));
        if self.echelons.is_empty() || self.echelons.iter().any(|&n| n < 2) {
            return bad(format!("echelons {:?} must be non-empty and >= 2", self.echelons));
        }
        if self.periods.is_empty() || self.periods.iter().any(|&t| t < 2) {
            return bad(format!("periods {:?} must be non-empty and >= 2", self.periods));
        }
        if self.lead_times.is_empty() {
            return bad("lead_times must be non-empty".into());
        }
        if self.patterns.is_empty() {
            return bad("patterns must be non-empty".into());
        }
        let ranges = [
            ("holding_cost", self.holding_cost, true),
            ("backorder_cost", self.backorder_cost, true),
            ("backorder_ratio", self.backorder_ratio, true),
            ("capacity", self.capacity, true),
            ("initial_inventory", self.initial_inventory, false),
            ("demand_mean", self.demand_mean, true),
            ("seasonal_amplitude", self.seasonal_amplitude, false),
            ("step_ratio", self.step_ratio, true),
        ];
        for (name, [lo, hi], positive) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) || lo < 0.0 || (positive && lo <= 0.0) {
                return bad(format!("{name} range [{lo}, {hi}] is empty or out of domain"));
            }
        }
        if self.seasonal_amplitude[1] >= 1.0 {
            return bad("seasonal_amplitude must stay below 1 to keep demand positive".into());
        }
        let [h_lo, h_hi] = self.holding_cost;
        let [b_lo, b_hi] = self.backorder_cost;
        let [r_lo, r_hi] = self.backorder_ratio;
        // every holding cost must leave some backorder cost in the ratio band
        if b_hi < h_hi * r_lo || b_lo > h_lo * r_hi {
            return bad("backorder_cost range cannot satisfy backorder_ratio for every holding cost".into());
        }
        if self.max_retries == 0 {
            return bad("max_retries must be positive".into());
        }
        Ok(())
    }
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, values: &[T]) -> T {
    *values.choose(rng).expect("validated non-empty")
}

/// Samples one instance. Costs are rounded to cents and quantities to one
/// decimal so the prose description carries every parameter exactly.
pub fn sample_instance(cfg: &GeneratorConfig, seed: u64) -> Result<ScInstance, GeneratorError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pick(&mut rng, &cfg.echelons);
    let t = pick(&mut rng, &cfg.periods);

    let mut holding = None;
    for _ in 0..cfg.max_retries {
        let h: Vec<f64> = (0..n)
            .map(|_| round_to(uniform(&mut rng, cfg.holding_cost), 2).max(0.01))
            .collect();
        if h.windows(2).all(|w| w[1] <= w[0]) {
            holding = Some(h);
            break;
        }
    }
    let holding = holding.ok_or(GeneratorError::Exhausted {
        what: "holding cost sequence",
        tries: cfg.max_retries,
    })?;

    let mut backorder = Vec::with_capacity(n);
    for &h in &holding {
        let mut found = None;
        for _ in 0..cfg.max_retries {
            let b = round_to(uniform(&mut rng, cfg.backorder_cost), 2);
            let r = b / h;
            if r >= cfg.backorder_ratio[0] && r <= cfg.backorder_ratio[1] {
                found = Some(b);
                break;
            }
        }
        backorder.push(found.ok_or(GeneratorError::Exhausted {
            what: "backorder cost",
            tries: cfg.max_retries,
        })?);
    }

    let capacity: Vec<f64> = (0..n).map(|_| round_to(uniform(&mut rng, cfg.capacity), 1)).collect();
    let lead_time: Vec<usize> = (0..n).map(|_| pick(&mut rng, &cfg.lead_times)).collect();

    let mean = round_to(uniform(&mut rng, cfg.demand_mean), 1);
    let pattern = match pick(&mut rng, &cfg.patterns) {
        PatternKind::Stationary => DemandPattern::Stationary { mean },
        PatternKind::StepChange => {
            let lo = t.div_ceil(3).max(1);
            let hi = (2 * t / 3).max(lo);
            DemandPattern::StepChange {
                mean_before: mean,
                mean_after: round_to(uniform(&mut rng, cfg.step_ratio) * mean, 1).max(0.1),
                change_point: rng.gen_range(lo..=hi),
            }
        }
        PatternKind::Seasonal => DemandPattern::Seasonal {
            mean,
            amplitude: round_to(uniform(&mut rng, cfg.seasonal_amplitude) * mean, 1),
        },
    };
    let demand = demand_series(&pattern, t)?;
    let realized = demand.iter().sum::<f64>() / t as f64;
    let initial_inventory: Vec<f64> = (0..n)
        .map(|_| round_to(uniform(&mut rng, cfg.initial_inventory) * realized, 1))
        .collect();

    let inst = ScInstance {
        n_echelons: n,
        n_periods: t,
        holding_cost: holding,
        backorder_cost: backorder,
        capacity,
        lead_time,
        demand,
        initial_inventory,
        demand_pattern: pattern,
    };
    inst.validate()?;
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub accepted: bool,
    pub reason: String,
    pub objective: Option<f64>,
    pub active_constraints: usize,
}

/// Rows whose slack is within `tol` at the optimum. Equality rows are always
/// tight and carry no information, so only inequality rows are counted.
pub fn active_inequalities(model: &Model, outcome: &SolveOutcome<f64>, tol: f64) -> usize {
    let Some(slacks) = &outcome.slacks else {
        return 0;
    };
    model
        .constraints()
        .filter(|c| c.sense != crate::lp::Sense::Eq)
        .filter(|c| slacks.get(&c.name).is_some_and(|s| s.abs() <= tol))
        .count()
}

pub fn accept_instance(
    inst: &ScInstance,
    cfg: &GeneratorConfig,
    solver: &Solver<f64>,
) -> Result<(Acceptance, Option<SolveOutcome<f64>>), GeneratorError> {
    let model: Model = build_lp(inst)?;
    let out = solver.solve(&model)?;
    if out.status != SolveStatus::Optimal {
        return Ok((
            Acceptance {
                accepted: false,
                reason: format!("baseline status {}", out.status),
                objective: None,
                active_constraints: 0,
            },
            None,
        ));
    }
    let objective = out.objective.expect("optimal has objective");
    let active = active_inequalities(&model, &out, solver.options.feas_tol);
    let (accepted, reason) = if objective < cfg.min_objective {
        (false, format!("objective {objective} below threshold {}", cfg.min_objective))
    } else if active < cfg.min_active_constraints {
        (
            false,
            format!("fewer than {} active constraints ({active})", cfg.min_active_constraints),
        )
    } else {
        (true, "accepted".to_string())
    };
    Ok((
        Acceptance {
            accepted,
            reason,
            objective: Some(objective),
            active_constraints: active,
        },
        Some(out),
    ))
}

/// Samples from consecutive sub-seeds of `seed` until an instance passes the filter.
pub fn generate_accepted(
    cfg: &GeneratorConfig,
    seed: u64,
    solver: &Solver<f64>,
) -> Result<(ScInstance, SolveOutcome<f64>, u64), GeneratorError> {
    let mut stream = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.max_retries {
        let sub = stream.gen::<u64>();
        let inst = sample_instance(cfg, sub)?;
        if let (Acceptance { accepted: true, .. }, Some(out)) = accept_instance(&inst, cfg, solver)? {
            return Ok((inst, out, sub));
        }
    }
    Err(GeneratorError::Exhausted {
        what: "accepted instance",
        tries: cfg.max_retries,
    })
}

pub fn render_nl_description(inst: &ScInstance) -> String {
    let n = inst.n_echelons;
    let mut s = String::new();
    let roles: Vec<&str> = (1..=n).map(|e| echelon_role(e, n)).collect();
    let _ = writeln!(
        s,
        "A serial supply chain with {n} echelons ({}) is planned over {} periods.",
        roles.join(" -> "),
        inst.n_periods
    );
    let _ = writeln!(
        s,
        "Echelon 1 serves external customer demand; each upstream echelon supplies the echelon below it, and echelon {n} orders from an unlimited source."
    );
    for e in 1..=n {
        let i = e - 1;
        let _ = writeln!(
            s,
            "- Echelon {e} ({}): holding cost h={} per unit per period, backorder cost b={} per unit per period, capacity C={} units per period, lead time L={} periods, initial inventory {} units.",
            roles[i],
            inst.holding_cost[i],
            inst.backorder_cost[i],
            inst.capacity[i],
            inst.lead_time[i],
            inst.initial_inventory[i],
        );
    }
    match &inst.demand_pattern {
        DemandPattern::Stationary { mean } => {
            let _ = writeln!(s, "Demand is stationary at {mean} units per period.");
        }
        DemandPattern::StepChange {
            mean_before,
            mean_after,
            change_point,
        } => {
            let _ = writeln!(
                s,
                "Demand follows a step_change pattern: {mean_before} units per period through period {change_point}, then {mean_after} units per period."
            );
        }
        DemandPattern::Seasonal { mean, amplitude } => {
            let _ = writeln!(
                s,
                "Demand follows a seasonal pattern with mean {mean} and amplitude {amplitude}: d_t = {mean} + {amplitude}*sin(2*pi*t/{}).",
                inst.n_periods
            );
        }
    }
    let _ = write!(
        s,
        "Orders arrive after the lead time, unmet demand is backordered, and the goal is to minimize total holding and backorder cost."
    );
    s
}
