//! Irreducible infeasible subsystems by deletion filtering.
//!
//! Members are rows and finite variable bounds. The filter starts from the
//! support of the phase-one Farkas certificate (itself infeasible), then tries
//! to delete each member in order: rows in model order, then bounds in
//! variable order with the lower side first. A deletion that keeps the
//! subsystem infeasible is made permanent and the working set is narrowed to
//! the new certificate's support; otherwise the member is kept.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::model::LpModel;
use super::simplex::{self, FarkasSupport, StandardForm};
use super::solve::{compile, LpError, SolverOptions};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundMember<S> {
    pub variable: String,
    pub side: BoundSide,
    pub value: S,
}

impl<S: Scalar> fmt::Display for BoundMember<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.side {
            BoundSide::Lower => ">=",
            BoundSide::Upper => "<=",
        };
        write!(f, "{} {} {}", self.variable, op, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IisCertificate<S> {
    pub constraint_members: Vec<String>,
    pub bound_members: Vec<BoundMember<S>>,
}

impl<S: Scalar> IisCertificate<S> {
    pub fn is_empty(&self) -> bool {
        self.constraint_members.is_empty() && self.bound_members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.constraint_members.len() + self.bound_members.len()
    }

    pub fn contains_constraint(&self, name: &str) -> bool {
        self.constraint_members.iter().any(|c| c == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Member {
    Row(usize),
    Lower(usize),
    Upper(usize),
}

/// Sort key giving rows first, then per variable lower before upper.
fn order_key(m: &Member) -> (u8, usize, u8) {
    match *m {
        Member::Row(i) => (0, i, 0),
        Member::Lower(j) => (1, j, 0),
        Member::Upper(j) => (1, j, 1),
    }
}

fn all_members<S: Scalar>(sf: &StandardForm<S>) -> Vec<Member> {
    let mut v: Vec<Member> = (0..sf.n_rows()).map(Member::Row).collect();
    for j in 0..sf.n_struct {
        if sf.lower[j].is_finite() {
            v.push(Member::Lower(j));
        }
        if sf.upper[j].is_finite() {
            v.push(Member::Upper(j));
        }
    }
    v
}

fn support_members(sup: &FarkasSupport, map: &SubMap) -> Vec<Member> {
    let mut v: Vec<Member> = sup.rows.iter().map(|&i| Member::Row(map.rows[i])).collect();
    v.extend(sup.lower.iter().map(|&j| Member::Lower(map.cols[j])));
    v.extend(sup.upper.iter().map(|&j| Member::Upper(map.cols[j])));
    v.sort_by_key(order_key);
    v.dedup();
    v
}

/// Index maps from a subsystem's standard form back to the full one.
struct SubMap {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

fn subsystem<S: Scalar>(full: &StandardForm<S>, members: &[Member]) -> (StandardForm<S>, SubMap) {
    let mut row_ids = Vec::new();
    let mut has_lower = vec![false; full.n_struct];
    let mut has_upper = vec![false; full.n_struct];
    for m in members {
        match *m {
            Member::Row(i) => row_ids.push(i),
            Member::Lower(j) => has_lower[j] = true,
            Member::Upper(j) => has_upper[j] = true,
        }
    }
    row_ids.sort_unstable();
    // keep only columns touched by a kept row or a kept bound
    let mut used = vec![false; full.n_struct];
    for &i in &row_ids {
        for &(j, _) in &full.rows[i] {
            used[j] = true;
        }
    }
    for j in 0..full.n_struct {
        if has_lower[j] || has_upper[j] {
            used[j] = true;
        }
    }
    let cols: Vec<usize> = (0..full.n_struct).filter(|&j| used[j]).collect();
    let mut new_index = vec![usize::MAX; full.n_struct];
    for (k, &j) in cols.iter().enumerate() {
        new_index[j] = k;
    }
    let sf = StandardForm {
        n_struct: cols.len(),
        rows: row_ids
            .iter()
            .map(|&i| full.rows[i].iter().map(|&(j, a)| (new_index[j], a)).collect())
            .collect(),
        senses: row_ids.iter().map(|&i| full.senses[i]).collect(),
        rhs: row_ids.iter().map(|&i| full.rhs[i]).collect(),
        lower: cols
            .iter()
            .map(|&j| if has_lower[j] { full.lower[j] } else { S::neg_infinity() })
            .collect(),
        upper: cols
            .iter()
            .map(|&j| if has_upper[j] { full.upper[j] } else { S::infinity() })
            .collect(),
        cost: vec![S::zero(); cols.len()],
    };
    (sf, SubMap { rows: row_ids, cols })
}

/// `Ok(None)` when the member set is feasible, else the support of its certificate.
fn test_members<S: Scalar>(
    full: &StandardForm<S>,
    members: &[Member],
    opts: &SolverOptions<S>,
) -> Result<Option<Vec<Member>>, LpError> {
    let (sf, map) = subsystem(full, members);
    Ok(simplex::feasibility(&sf, opts.tolerances())?.map(|sup| support_members(&sup, &map)))
}

/// Computes one IIS of an infeasible model.
pub fn compute_iis<S: Scalar>(
    model: &LpModel<S>,
    opts: &SolverOptions<S>,
) -> Result<IisCertificate<S>, LpError> {
    let full = compile(model, opts)?;
    let everything = all_members(&full);
    let Some(first_support) = test_members(&full, &everything, opts)? else {
        return Err(LpError::NotInfeasible);
    };

    let mut set = if !first_support.is_empty() && test_members(&full, &first_support, opts)?.is_some() {
        first_support
    } else {
        everything
    };

    let mut k = 0;
    while k < set.len() {
        let candidate = set[k];
        let trial: Vec<Member> = set.iter().copied().filter(|&m| m != candidate).collect();
        match test_members(&full, &trial, opts)? {
            Some(support) => {
                // still infeasible without the candidate: drop it for good
                let narrowed: Vec<Member> =
                    trial.iter().copied().filter(|m| support.contains(m)).collect();
                let keep_narrowed = narrowed.len() < trial.len()
                    && !narrowed.is_empty()
                    && test_members(&full, &narrowed, opts)?.is_some();
                let next = if keep_narrowed { narrowed } else { trial };
                // members before k were all confirmed necessary and survive narrowing
                k = next.iter().take_while(|m| order_key(m) < order_key(&candidate)).count();
                set = next;
            }
            None => k += 1,
        }
    }

    Ok(certificate(model, &full, &set))
}

fn certificate<S: Scalar>(
    model: &LpModel<S>,
    full: &StandardForm<S>,
    set: &[Member],
) -> IisCertificate<S> {
    let row_names: Vec<&str> = model.constraint_names().collect();
    let var_names: Vec<&str> = model.variables().map(|v| v.name.as_str()).collect();
    let mut cert = IisCertificate {
        constraint_members: Vec::new(),
        bound_members: Vec::new(),
    };
    for m in set {
        match *m {
            Member::Row(i) => cert.constraint_members.push(row_names[i].to_string()),
            Member::Lower(j) => cert.bound_members.push(BoundMember {
                variable: var_names[j].to_string(),
                side: BoundSide::Lower,
                value: full.lower[j],
            }),
            Member::Upper(j) => cert.bound_members.push(BoundMember {
                variable: var_names[j].to_string(),
                side: BoundSide::Upper,
                value: full.upper[j],
            }),
        }
    }
    cert
}

/// Outcome of re-checking a certificate against a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IisCheck {
    pub members_infeasible: bool,
    /// Members whose single deletion still leaves an infeasible subsystem.
    pub redundant_members: Vec<String>,
    /// Certificate entries that do not exist in the model.
    pub unknown_members: Vec<String>,
}

impl IisCheck {
    pub fn is_valid_iis(&self) -> bool {
        self.members_infeasible && self.redundant_members.is_empty() && self.unknown_members.is_empty()
    }
}

/// Verifies that a certificate is infeasible on its own and irreducible.
pub fn check_iis<S: Scalar>(
    model: &LpModel<S>,
    cert: &IisCertificate<S>,
    opts: &SolverOptions<S>,
) -> Result<IisCheck, LpError> {
    let full = compile(model, opts)?;
    let row_names: Vec<&str> = model.constraint_names().collect();
    let mut members = Vec::new();
    let mut labels = Vec::new();
    let mut unknown = Vec::new();
    for name in &cert.constraint_members {
        match row_names.iter().position(|r| r == name) {
            Some(i) => {
                members.push(Member::Row(i));
                labels.push(name.clone());
            }
            None => unknown.push(name.clone()),
        }
    }
    for b in &cert.bound_members {
        match model.variable_index(&b.variable) {
            Some(j) => {
                members.push(match b.side {
                    BoundSide::Lower => Member::Lower(j),
                    BoundSide::Upper => Member::Upper(j),
                });
                labels.push(b.to_string());
            }
            None => unknown.push(b.to_string()),
        }
    }
    let members_infeasible = test_members(&full, &members, opts)?.is_some();
    let mut redundant = Vec::new();
    for (k, m) in members.iter().enumerate() {
        let rest: Vec<Member> = members.iter().copied().filter(|x| x != m).collect();
        if test_members(&full, &rest, opts)?.is_some() {
            redundant.push(labels[k].clone());
        }
    }
    Ok(IisCheck {
        members_infeasible,
        redundant_members: redundant,
        unknown_members: unknown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::model::Sense;

    #[test]
    fn unique_minimal_conflict() {
        let mut m = LpModel::<f64>::new();
        m.add_variable("x", 0.0, f64::INFINITY, 1.0).unwrap();
        m.add_variable("y", 0.0, f64::INFINITY, 1.0).unwrap();
        m.add_constraint("x_le_5", [("x", 1.0)], Sense::Le, 5.0).unwrap();
        m.add_constraint("x_ge_10", [("x", 1.0)], Sense::Ge, 10.0).unwrap();
        m.add_constraint("y_le_3", [("y", 1.0)], Sense::Le, 3.0).unwrap();
        let opts = SolverOptions::default();
        let cert = compute_iis(&m, &opts).unwrap();
        assert_eq!(cert.constraint_members, ["x_le_5", "x_ge_10"]);
        assert!(cert.bound_members.is_empty());
        assert!(check_iis(&m, &cert, &opts).unwrap().is_valid_iis());
    }

    #[test]
    fn bound_members_are_reported() {
        // x <= 4 as a bound, x + y >= 9 row, y <= 2 as a bound
        let mut m = LpModel::<f64>::new();
        m.add_variable("x", 0.0, 4.0, 0.0).unwrap();
        m.add_variable("y", 0.0, 2.0, 0.0).unwrap();
        m.add_constraint("need", [("x", 1.0), ("y", 1.0)], Sense::Ge, 9.0).unwrap();
        let opts = SolverOptions::default();
        let cert = compute_iis(&m, &opts).unwrap();
        assert_eq!(cert.constraint_members, ["need"]);
        let b: Vec<String> = cert.bound_members.iter().map(|b| b.to_string()).collect();
        assert_eq!(b, ["x <= 4", "y <= 2"]);
        assert!(check_iis(&m, &cert, &opts).unwrap().is_valid_iis());
    }

    #[test]
    fn feasible_model_is_a_contract_violation() {
        let mut m = LpModel::<f64>::new();
        m.add_variable("x", 0.0, 1.0, 0.0).unwrap();
        assert_eq!(
            compute_iis(&m, &SolverOptions::default()),
            Err(LpError::NotInfeasible)
        );
    }

    #[test]
    fn chain_conflict_keeps_every_link() {
        // a >= 10, b >= a, c >= b, c <= 3
        let mut m = LpModel::<f64>::new();
        for v in ["a", "b", "c", "z"] {
            m.add_variable(v, 0.0, f64::INFINITY, 0.0).unwrap();
        }
        m.add_constraint("r0", [("a", 1.0)], Sense::Ge, 10.0).unwrap();
        m.add_constraint("noise", [("z", 1.0), ("a", 1.0)], Sense::Ge, 1.0).unwrap();
        m.add_constraint("r1", [("b", 1.0), ("a", -1.0)], Sense::Ge, 0.0).unwrap();
        m.add_constraint("r2", [("c", 1.0), ("b", -1.0)], Sense::Ge, 0.0).unwrap();
        m.add_constraint("r3", [("c", 1.0)], Sense::Le, 3.0).unwrap();
        let opts = SolverOptions::default();
        let cert = compute_iis(&m, &opts).unwrap();
        assert_eq!(cert.constraint_members, ["r0", "r1", "r2", "r3"]);
        let again = compute_iis(&m, &opts).unwrap();
        assert_eq!(cert, again);
    }
}
