//! Canonical plain-text LP format.
//!
//! ```text
//! minimize
//!  obj: 3*hold_e1_t1 + 12*back_e1_t1
//! subject to
//!  capacity_e1_t1: 1*x_e1_t1 <= 120
//! bounds
//!  0 <= x_e1_t1 <= inf
//! end
//! ```
//!
//! Rows and variables are written in model order and numbers use the
//! shortest round-tripping decimal form, so write/parse/write is a fixed point.

use std::fmt::Write as _;

use thiserror::Error;

use super::model::{LpModel, ModelError, Sense};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn write_terms<'a, S: Scalar>(out: &mut String, terms: impl Iterator<Item = (&'a str, S)>) {
    let mut first = true;
    for (var, c) in terms {
        if first {
            let _ = write!(out, "{}*{}", c, var);
        } else if c.is_sign_negative() {
            let _ = write!(out, " - {}*{}", -c, var);
        } else {
            let _ = write!(out, " + {}*{}", c, var);
        }
        first = false;
    }
    if first {
        out.push('0');
    }
}

pub fn write_lp<S: Scalar>(model: &LpModel<S>) -> String {
    let mut out = String::from("minimize\n obj: ");
    write_terms(
        &mut out,
        model
            .variables()
            .filter(|v| v.objective != S::zero())
            .map(|v| (v.name.as_str(), v.objective)),
    );
    out.push_str("\nsubject to\n");
    for c in model.constraints() {
        let _ = write!(out, " {}: ", c.name);
        write_terms(&mut out, c.coeffs.iter().map(|(v, &a)| (v.as_str(), a)));
        let _ = writeln!(out, " {} {}", c.sense, c.rhs);
    }
    out.push_str("bounds\n");
    for v in model.variables() {
        let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
    }
    out.push_str("end\n");
    out
}

fn parse_num<S: Scalar>(tok: &str, line: usize) -> Result<S, ParseError> {
    tok.parse::<S>()
        .map_err(|_| syntax(line, format!("bad number `{tok}`")))
}

fn parse_terms<S: Scalar>(expr: &str, line: usize) -> Result<Vec<(String, S)>, ParseError> {
    let mut terms = Vec::new();
    let mut sign = S::one();
    let mut expect_term = true;
    for tok in expr.split_whitespace() {
        match tok {
            "+" | "-" if !expect_term => {
                sign = if tok == "-" { -S::one() } else { S::one() };
                expect_term = true;
            }
            "0" if terms.is_empty() && expect_term => expect_term = false,
            _ if expect_term => {
                let (coef, var) = match tok.split_once('*') {
                    Some((c, v)) => (parse_num::<S>(c, line)?, v),
                    None => match tok.strip_prefix('-') {
                        Some(v) => (-S::one(), v),
                        None => (S::one(), tok),
                    },
                };
                if var.is_empty() {
                    return Err(syntax(line, format!("missing variable in `{tok}`")));
                }
                terms.push((var.to_string(), sign * coef));
                sign = S::one();
                expect_term = false;
            }
            _ => return Err(syntax(line, format!("unexpected `{tok}`"))),
        }
    }
    if expect_term && !terms.is_empty() {
        return Err(syntax(line, "expression ends with an operator"));
    }
    Ok(terms)
}

#[derive(PartialEq)]
enum Section {
    Start,
    Objective,
    Rows,
    Bounds,
    End,
}

struct RawRow<S> {
    name: String,
    terms: Vec<(String, S)>,
    sense: Sense,
    rhs: S,
}

pub fn parse_lp<S: Scalar>(text: &str) -> Result<LpModel<S>, ParseError> {
    let mut section = Section::Start;
    let mut objective: Vec<(String, S)> = Vec::new();
    let mut rows: Vec<RawRow<S>> = Vec::new();
    let mut bounds: Vec<(String, S, S)> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('\\') {
            continue;
        }
        match l.to_ascii_lowercase().as_str() {
            "minimize" | "min" => {
                section = Section::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                section = Section::Rows;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "end" => {
                section = Section::End;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Start => return Err(syntax(line, "expected `minimize`")),
            Section::End => return Err(syntax(line, "content after `end`")),
            Section::Objective => {
                let expr = l.split_once(':').map_or(l, |(_, e)| e);
                objective.extend(parse_terms::<S>(expr, line)?);
            }
            Section::Rows => {
                let (name, body) = l
                    .split_once(':')
                    .ok_or_else(|| syntax(line, "row without a name"))?;
                let toks: Vec<&str> = body.split_whitespace().collect();
                let pos = toks
                    .iter()
                    .rposition(|t| Sense::from_symbol(t).is_some())
                    .ok_or_else(|| syntax(line, "row without a sense"))?;
                if pos + 2 != toks.len() {
                    return Err(syntax(line, "expected a single right-hand side"));
                }
                rows.push(RawRow {
                    name: name.trim().to_string(),
                    terms: parse_terms(&toks[..pos].join(" "), line)?,
                    sense: Sense::from_symbol(toks[pos]).expect("checked above"),
                    rhs: parse_num(toks[pos + 1], line)?,
                });
            }
            Section::Bounds => {
                let toks: Vec<&str> = l.split_whitespace().collect();
                match toks.as_slice() {
                    [lo, "<=", var, "<=", hi] => {
                        bounds.push((var.to_string(), parse_num(lo, line)?, parse_num(hi, line)?))
                    }
                    _ => return Err(syntax(line, "expected `lb <= var <= ub`")),
                }
            }
        }
    }
    if section != Section::End {
        return Err(syntax(text.lines().count(), "missing `end`"));
    }

    let mut model = LpModel::new();
    for (var, lo, hi) in bounds {
        model.add_variable(var, lo, hi, S::zero())?;
    }
    // variables that only appear in rows or the objective default to [0, inf)
    let ensure = |model: &mut LpModel<S>, var: &str| -> Result<(), ModelError> {
        if model.variable(var).is_none() {
            model.add_variable(var, S::zero(), S::infinity(), S::zero())?;
        }
        Ok(())
    };
    for (var, c) in &objective {
        ensure(&mut model, var)?;
        let v = model.variable_mut(var).expect("just ensured");
        v.objective = v.objective + *c;
    }
    for r in rows {
        for (var, _) in &r.terms {
            ensure(&mut model, var)?;
        }
        model.add_constraint(r.name, r.terms, r.sense, r.rhs)?;
    }
    Ok(model)
}
