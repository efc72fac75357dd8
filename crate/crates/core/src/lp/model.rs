use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint `{0}`")]
    DuplicateConstraint(String),
    #[error("constraint `{constraint}` references unknown variable `{variable}`")]
    UnknownVariable { constraint: String, variable: String },
    #[error("unknown constraint `{0}`")]
    UnknownConstraint(String),
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InvalidBounds { name: String, lower: String, upper: String },
}

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "<=" | "=<" => Some(Sense::Le),
            ">=" | "=>" => Some(Sense::Ge),
            "=" | "==" => Some(Sense::Eq),
            _ => None,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable<S> {
    pub name: String,
    pub lower: S,
    pub upper: S,
    /// Objective coefficient (the model always minimizes).
    pub objective: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S> {
    pub name: String,
    pub coeffs: IndexMap<String, S>,
    pub sense: Sense,
    pub rhs: S,
}

impl<S: Scalar> Constraint<S> {
    pub fn activity(&self, value_of: impl Fn(&str) -> S) -> S {
        self.coeffs
            .iter()
            .fold(S::zero(), |acc, (v, c)| acc + *c * value_of(v))
    }

    /// Nonnegative slack of the row at the given activity; equality rows report
    /// the absolute residual.
    pub fn slack_at(&self, activity: S) -> S {
        match self.sense {
            Sense::Le => self.rhs - activity,
            Sense::Ge => activity - self.rhs,
            Sense::Eq => (activity - self.rhs).abs(),
        }
    }
}

/// True when `name` equals `prefix` or continues it at a `_` segment boundary,
/// so `capacity_e1` matches `capacity_e1_t3` but not `capacity_e10_t3`.
pub fn matches_prefix(name: &str, prefix: &str) -> bool {
    if prefix.is_empty() {
        return false;
    }
    match name.strip_prefix(prefix) {
        Some("") => true,
        Some(rest) => rest.starts_with('_') || prefix.ends_with('_'),
        None => false,
    }
}

/// A minimization LP with named variables and named rows, kept in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpModel<S> {
    variables: IndexMap<String, Variable<S>>,
    constraints: IndexMap<String, Constraint<S>>,
}

impl<S: Scalar> LpModel<S> {
    pub fn new() -> Self {
        LpModel {
            variables: IndexMap::new(),
            constraints: IndexMap::new(),
        }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: S,
        upper: S,
        objective: S,
    ) -> Result<(), ModelError> {
        let name = name.into();
        if self.variables.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        check_bounds(&name, lower, upper)?;
        self.variables.insert(
            name.clone(),
            Variable {
                name,
                lower,
                upper,
                objective,
            },
        );
        Ok(())
    }

    pub fn add_constraint<N, I>(
        &mut self,
        name: impl Into<String>,
        terms: I,
        sense: Sense,
        rhs: S,
    ) -> Result<(), ModelError>
    where
        N: Into<String>,
        I: IntoIterator<Item = (N, S)>,
    {
        let c = self.make_constraint(name.into(), terms, sense, rhs)?;
        if self.constraints.contains_key(&c.name) {
            return Err(ModelError::DuplicateConstraint(c.name));
        }
        self.constraints.insert(c.name.clone(), c);
        Ok(())
    }

    fn make_constraint<N, I>(
        &self,
        name: String,
        terms: I,
        sense: Sense,
        rhs: S,
    ) -> Result<Constraint<S>, ModelError>
    where
        N: Into<String>,
        I: IntoIterator<Item = (N, S)>,
    {
        let mut coeffs: IndexMap<String, S> = IndexMap::new();
        for (var, coef) in terms {
            let var = var.into();
            if !self.variables.contains_key(&var) {
                return Err(ModelError::UnknownVariable {
                    constraint: name,
                    variable: var,
                });
            }
            let entry = coeffs.entry(var).or_insert_with(S::zero);
            *entry = *entry + coef;
        }
        Ok(Constraint {
            name,
            coeffs,
            sense,
            rhs,
        })
    }

    /// Replaces the row `name` in place by the given rows, preserving the
    /// position of the original row in the model order.
    pub fn replace_constraint(
        &mut self,
        name: &str,
        replacements: Vec<Constraint<S>>,
    ) -> Result<(), ModelError> {
        let idx = self
            .constraints
            .get_index_of(name)
            .ok_or_else(|| ModelError::UnknownConstraint(name.to_string()))?;
        for r in &replacements {
            if r.name != name && self.constraints.contains_key(&r.name) {
                return Err(ModelError::DuplicateConstraint(r.name.clone()));
            }
            for var in r.coeffs.keys() {
                if !self.variables.contains_key(var) {
                    return Err(ModelError::UnknownVariable {
                        constraint: r.name.clone(),
                        variable: var.clone(),
                    });
                }
            }
        }
        self.constraints.shift_remove_index(idx);
        for (k, r) in replacements.into_iter().enumerate() {
            self.constraints.shift_insert(idx + k, r.name.clone(), r);
        }
        Ok(())
    }

    pub fn remove_constraint(&mut self, name: &str) -> Result<Constraint<S>, ModelError> {
        self.constraints
            .shift_remove(name)
            .ok_or_else(|| ModelError::UnknownConstraint(name.to_string()))
    }

    pub fn set_bounds(&mut self, name: &str, lower: S, upper: S) -> Result<(), ModelError> {
        check_bounds(name, lower, upper)?;
        let v = self
            .variables
            .get_mut(name)
            .ok_or_else(|| ModelError::UnknownVariable {
                constraint: String::new(),
                variable: name.to_string(),
            })?;
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn variable(&self, name: &str) -> Option<&Variable<S>> {
        self.variables.get(name)
    }

    pub fn variable_mut(&mut self, name: &str) -> Option<&mut Variable<S>> {
        self.variables.get_mut(name)
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.get_index_of(name)
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint<S>> {
        self.constraints.get(name)
    }

    pub fn constraint_mut(&mut self, name: &str) -> Option<&mut Constraint<S>> {
        self.constraints.get_mut(name)
    }

    pub fn variables(&self) -> impl ExactSizeIterator<Item = &Variable<S>> {
        self.variables.values()
    }

    pub fn constraints(&self) -> impl ExactSizeIterator<Item = &Constraint<S>> {
        self.constraints.values()
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraint_names(&self) -> impl Iterator<Item = &str> {
        self.constraints.keys().map(String::as_str)
    }

    pub fn constraints_matching(&self, prefix: &str) -> Vec<String> {
        self.constraints
            .keys()
            .filter(|n| matches_prefix(n, prefix))
            .cloned()
            .collect()
    }

    pub fn variables_matching(&self, prefix: &str) -> Vec<String> {
        self.variables
            .keys()
            .filter(|n| matches_prefix(n, prefix))
            .cloned()
            .collect()
    }

    pub fn objective_value(&self, value_of: impl Fn(&str) -> S) -> S {
        self.variables
            .values()
            .filter(|v| v.objective != S::zero())
            .fold(S::zero(), |acc, v| acc + v.objective * value_of(&v.name))
    }

    /// Largest absolute coefficient, bound, or right-hand side that is finite
    /// below `infinity`.
    pub fn max_abs_entry(&self, infinity: S) -> S {
        let mut m = S::zero();
        let mut see = |v: S| {
            let a = v.abs();
            if a < infinity && a > m {
                m = a;
            }
        };
        for v in self.variables.values() {
            see(v.lower);
            see(v.upper);
            see(v.objective);
        }
        for c in self.constraints.values() {
            see(c.rhs);
            c.coeffs.values().for_each(|&a| see(a));
        }
        m
    }
}

fn check_bounds<S: Scalar>(name: &str, lower: S, upper: S) -> Result<(), ModelError> {
    if lower.is_nan() || upper.is_nan() || lower > upper {
        return Err(ModelError::InvalidBounds {
            name: name.to_string(),
            lower: lower.to_string(),
            upper: upper.to_string(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_matching_respects_segments() {
        assert!(matches_prefix("capacity_e1_t3", "capacity_e1"));
        assert!(matches_prefix("capacity_e1", "capacity_e1"));
        assert!(!matches_prefix("capacity_e10_t3", "capacity_e1"));
        assert!(matches_prefix("capacity_e10_t3", "capacity_"));
        assert!(!matches_prefix("capacity_e1_t3", ""));
        assert!(!matches_prefix("cap", "capacity"));
    }

    #[test]
    fn rejects_duplicates_and_unknown_vars() {
        let mut m = LpModel::<f64>::new();
        m.add_variable("x", 0.0, f64::INFINITY, 1.0).unwrap();
        assert!(matches!(
            m.add_variable("x", 0.0, 1.0, 0.0),
            Err(ModelError::DuplicateVariable(_))
        ));
        m.add_constraint("r", [("x", 1.0)], Sense::Le, 5.0).unwrap();
        assert!(matches!(
            m.add_constraint("r", [("x", 1.0)], Sense::Le, 5.0),
            Err(ModelError::DuplicateConstraint(_))
        ));
        assert!(matches!(
            m.add_constraint("q", [("y", 1.0)], Sense::Le, 5.0),
            Err(ModelError::UnknownVariable { .. })
        ));
        assert!(m.add_variable("z", 2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn replace_keeps_position() {
        let mut m = LpModel::<f64>::new();
        m.add_variable("x", 0.0, 10.0, 0.0).unwrap();
        for n in ["a", "b", "c"] {
            m.add_constraint(n, [("x", 1.0)], Sense::Eq, 1.0).unwrap();
        }
        let b = m.constraint("b").unwrap().clone();
        let mut hi = b.clone();
        hi.name = "b_ub".into();
        hi.sense = Sense::Le;
        let mut lo = b;
        lo.name = "b_lb".into();
        lo.sense = Sense::Ge;
        m.replace_constraint("b", vec![hi, lo]).unwrap();
        let names: Vec<_> = m.constraint_names().collect();
        assert_eq!(names, ["a", "b_ub", "b_lb", "c"]);
    }
}
