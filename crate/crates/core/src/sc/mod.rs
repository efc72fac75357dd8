//! Serial multi-echelon supply chain instances and their LP formulation.

mod build;

pub use build::{build_lp, decision_variable_count, names};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScError {
    #[error("invalid instance: `{field}` {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScError {
    ScError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandPattern {
    Stationary {
        mean: f64,
    },
    /// `mean_before` through period `change_point`, `mean_after` from the next period on.
    StepChange {
        mean_before: f64,
        mean_after: f64,
        change_point: usize,
    },
    Seasonal {
        mean: f64,
        amplitude: f64,
    },
}

impl DemandPattern {
    pub fn label(&self) -> &'static str {
        match self {
            DemandPattern::Stationary { .. } => "stationary",
            DemandPattern::StepChange { .. } => "step_change",
            DemandPattern::Seasonal { .. } => "seasonal",
        }
    }
}

/// Per-period demand for periods `1..=T`.
pub fn demand_series(pattern: &DemandPattern, periods: usize) -> Result<Vec<f64>, ScError> {
    if periods < 2 {
        return Err(invalid("n_periods", format!("must be at least 2, got {periods}")));
    }
    let series: Vec<f64> = match *pattern {
        DemandPattern::Stationary { mean } => vec![mean; periods],
        DemandPattern::StepChange {
            mean_before,
            mean_after,
            change_point,
        } => (1..=periods)
            .map(|t| if t <= change_point { mean_before } else { mean_after })
            .collect(),
        DemandPattern::Seasonal { mean, amplitude } => {
            if amplitude.abs() >= mean {
                return Err(invalid(
                    "demand_pattern",
                    format!("seasonal amplitude {amplitude} must be below the mean {mean}"),
                ));
            }
            (1..=periods)
                .map(|t| {
                    let phase = 2.0 * std::f64::consts::PI * t as f64 / periods as f64;
                    mean + amplitude * phase.sin()
                })
                .collect()
        }
    };
    if let Some((t, d)) = series.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(invalid(
            "demand",
            format!("period {} has nonpositive demand {d}", t + 1),
        ));
    }
    Ok(series)
}

/// One serial supply chain: echelon 1 is the retailer, echelon N the factory.
/// Per-echelon vectors are indexed by `n - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScInstance {
    pub n_echelons: usize,
    pub n_periods: usize,
    pub holding_cost: Vec<f64>,
    pub backorder_cost: Vec<f64>,
    pub capacity: Vec<f64>,
    pub lead_time: Vec<usize>,
    pub demand: Vec<f64>,
    pub initial_inventory: Vec<f64>,
    pub demand_pattern: DemandPattern,
}

/// Relative slack allowed when checking that holding costs fall upstream.
pub const MONOTONE_TOLERANCE: f64 = 0.01;

pub fn echelon_role(n: usize, n_echelons: usize) -> &'static str {
    match (n, n_echelons) {
        (1, _) => "Retailer",
        (n, total) if n == total => "Factory",
        (2, _) => "Warehouse",
        (3, 5) => "Regional DC",
        _ => "Distributor",
    }
}

impl ScInstance {
    pub fn mean_demand(&self) -> f64 {
        self.demand.iter().sum::<f64>() / self.demand.len().max(1) as f64
    }

    pub fn total_initial_inventory(&self) -> f64 {
        self.initial_inventory.iter().sum()
    }

    /// True when `h_1 >= h_2 >= ... >= h_N` up to the relative tolerance.
    pub fn holding_costs_monotone(&self) -> bool {
        holding_monotone(&self.holding_cost, MONOTONE_TOLERANCE)
    }

    pub fn validate(&self) -> Result<(), ScError> {
        let n = self.n_echelons;
        if n < 2 {
            return Err(invalid("n_echelons", format!("must be at least 2, got {n}")));
        }
        if self.n_periods < 2 {
            return Err(invalid("n_periods", format!("must be at least 2, got {}", self.n_periods)));
        }
        let per_echelon: [(&'static str, usize); 5] = [
            ("holding_cost", self.holding_cost.len()),
            ("backorder_cost", self.backorder_cost.len()),
            ("capacity", self.capacity.len()),
            ("lead_time", self.lead_time.len()),
            ("initial_inventory", self.initial_inventory.len()),
        ];
        for (field, len) in per_echelon {
            if len != n {
                return Err(invalid(field, format!("has {len} entries for {n} echelons")));
            }
        }
        if self.demand.len() != self.n_periods {
            return Err(invalid(
                "demand",
                format!("has {} entries for {} periods", self.demand.len(), self.n_periods),
            ));
        }
        let positive: [(&'static str, &[f64]); 4] = [
            ("holding_cost", &self.holding_cost),
            ("backorder_cost", &self.backorder_cost),
            ("capacity", &self.capacity),
            ("demand", &self.demand),
        ];
        for (field, values) in positive {
            if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                return Err(invalid(field, format!("entry {} is {v}, must be positive", i + 1)));
            }
        }
        if let Some((i, v)) = self
            .initial_inventory
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(invalid("initial_inventory", format!("entry {} is {v}, must be nonnegative", i + 1)));
        }
        if !self.holding_costs_monotone() {
            return Err(invalid(
                "holding_cost",
                format!("{:?} must not increase upstream", self.holding_cost),
            ));
        }
        Ok(())
    }
}

pub fn holding_monotone(h: &[f64], tol: f64) -> bool {
    h.windows(2).all(|w| w[1] <= w[0] * (1.0 + tol))
}
