use super::{ScError, ScInstance};
use crate::lp::{LpModel, ModelError, Sense};
use crate::scalar::Scalar;

/// Canonical variable and row names.
pub mod names {
    pub fn order(n: usize, t: usize) -> String {
        format!("x_e{n}_t{t}")
    }
    pub fn hold(n: usize, t: usize) -> String {
        format!("hold_e{n}_t{t}")
    }
    pub fn back(n: usize, t: usize) -> String {
        format!("back_e{n}_t{t}")
    }
    /// Demand faced by an upstream echelon (the downstream neighbor's order).
    pub fn faced(n: usize, t: usize) -> String {
        format!("dem_e{n}_t{t}")
    }
    pub fn init_hold(n: usize) -> String {
        format!("init_hold_e{n}")
    }
    pub fn init_back(n: usize) -> String {
        format!("init_back_e{n}")
    }

    pub const INV_BALANCE: &str = "inv_balance";
    pub const DEMAND_PROP: &str = "demand_prop";
    pub const CAPACITY: &str = "capacity";
    pub const MIN_ORDER: &str = "min_order";
    pub const BULLWHIP_FORCE: &str = "bullwhip_force";
    pub const BACKORDER_CAP: &str = "backorder_cap";
    pub const SUPPLY_CAP: &str = "supply_cap";

    pub const FAMILIES: [&str; 7] = [
        INV_BALANCE,
        DEMAND_PROP,
        CAPACITY,
        MIN_ORDER,
        BULLWHIP_FORCE,
        BACKORDER_CAP,
        SUPPLY_CAP,
    ];

    pub fn row(family: &str, n: usize, t: usize) -> String {
        format!("{family}_e{n}_t{t}")
    }

    /// Prefix addressing every row of a family at one echelon.
    pub fn echelon_prefix(family: &str, n: usize) -> String {
        format!("{family}_e{n}")
    }

    /// Splits `family_e<n>_t<t>...` into its parts.
    pub fn parse_row(name: &str) -> Option<(&'static str, usize, Option<usize>)> {
        let family = FAMILIES
            .iter()
            .copied()
            .filter(|f| name.starts_with(f) && name[f.len()..].starts_with("_e"))
            .max_by_key(|f| f.len())?;
        let rest = &name[family.len() + 2..];
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        let n = rest[..end].parse().ok()?;
        let t = rest[end..]
            .strip_prefix("_t")
            .and_then(|r| {
                let e = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
                r[..e].parse().ok()
            });
        Some((family, n, t))
    }
}

fn model_err(e: ModelError) -> ScError {
    ScError::Invalid {
        field: "model",
        reason: e.to_string(),
    }
}

/// Builds the cost-minimizing LP of a validated instance.
///
/// Rows come family by family (`inv_balance`, `demand_prop`, `capacity`),
/// each ordered by echelon then period. Starting stock enters through fixed
/// variables `init_hold_e<n>` / `init_back_e<n>`, and orders that would have
/// been placed before period 1 never arrive.
pub fn build_lp<S: Scalar>(inst: &ScInstance) -> Result<LpModel<S>, ScError> {
    inst.validate()?;
    let (nn, tt) = (inst.n_echelons, inst.n_periods);
    let inf = S::infinity();
    let zero = S::zero();
    let mut m = LpModel::new();

    for n in 1..=nn {
        let i0 = S::of(inst.initial_inventory[n - 1]);
        m.add_variable(names::init_hold(n), i0, i0, zero).map_err(model_err)?;
        m.add_variable(names::init_back(n), zero, zero, zero).map_err(model_err)?;
    }
    for n in 1..=nn {
        let h = S::of(inst.holding_cost[n - 1]);
        let b = S::of(inst.backorder_cost[n - 1]);
        for t in 1..=tt {
            m.add_variable(names::order(n, t), zero, inf, zero).map_err(model_err)?;
            m.add_variable(names::hold(n, t), zero, inf, h).map_err(model_err)?;
            m.add_variable(names::back(n, t), zero, inf, b).map_err(model_err)?;
            if n >= 2 {
                m.add_variable(names::faced(n, t), zero, inf, zero).map_err(model_err)?;
            }
        }
    }

    let one = S::one();
    for n in 1..=nn {
        let lead = inst.lead_time[n - 1];
        for t in 1..=tt {
            let (prev_hold, prev_back) = if t == 1 {
                (names::init_hold(n), names::init_back(n))
            } else {
                (names::hold(n, t - 1), names::back(n, t - 1))
            };
            let mut terms = vec![
                (names::hold(n, t), one),
                (names::back(n, t), -one),
                (prev_hold, -one),
                (prev_back, one),
            ];
            if t > lead {
                terms.push((names::order(n, t - lead), -one));
            }
            let rhs = if n == 1 {
                -S::of(inst.demand[t - 1])
            } else {
                terms.push((names::faced(n, t), one));
                zero
            };
            m.add_constraint(names::row(names::INV_BALANCE, n, t), terms, Sense::Eq, rhs)
                .map_err(model_err)?;
        }
    }
    for n in 2..=nn {
        for t in 1..=tt {
            m.add_constraint(
                names::row(names::DEMAND_PROP, n, t),
                [(names::faced(n, t), one), (names::order(n - 1, t), -one)],
                Sense::Eq,
                zero,
            )
            .map_err(model_err)?;
        }
    }
    for n in 1..=nn {
        let cap = S::of(inst.capacity[n - 1]);
        for t in 1..=tt {
            m.add_constraint(
                names::row(names::CAPACITY, n, t),
                [(names::order(n, t), one)],
                Sense::Le,
                cap,
            )
            .map_err(model_err)?;
        }
    }
    Ok(m)
}

/// Number of order, inventory and backorder variables (`3NT`).
pub fn decision_variable_count(inst: &ScInstance) -> usize {
    3 * inst.n_echelons * inst.n_periods
}
