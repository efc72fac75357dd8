//! The eight-action repair vocabulary and its two wire forms:
//! `Action: KIND(args)` text lines and `{"action": KIND, "target": .., "value": ..}` objects.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ActionParseError(pub String);

fn perr(m: impl Into<String>) -> ActionParseError {
    ActionParseError(m.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    GetIis,
    CheckSlack,
    RelaxConstraint,
    DropConstraint,
    UpdateObj,
    UpdateBounds,
    UpdateRhs,
    Submit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionCategory {
    Diagnostic,
    Repair,
    Meta,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::GetIis,
        ActionKind::CheckSlack,
        ActionKind::RelaxConstraint,
        ActionKind::DropConstraint,
        ActionKind::UpdateObj,
        ActionKind::UpdateBounds,
        ActionKind::UpdateRhs,
        ActionKind::Submit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::GetIis => "GET_IIS",
            ActionKind::CheckSlack => "CHECK_SLACK",
            ActionKind::RelaxConstraint => "RELAX_CONSTRAINT",
            ActionKind::DropConstraint => "DROP_CONSTRAINT",
            ActionKind::UpdateObj => "UPDATE_OBJ",
            ActionKind::UpdateBounds => "UPDATE_BOUNDS",
            ActionKind::UpdateRhs => "UPDATE_RHS",
            ActionKind::Submit => "SUBMIT",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_uppercase();
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn category(self) -> ActionCategory {
        match self {
            ActionKind::GetIis | ActionKind::CheckSlack => ActionCategory::Diagnostic,
            ActionKind::Submit => ActionCategory::Meta,
            _ => ActionCategory::Repair,
        }
    }

    pub fn is_repair(self) -> bool {
        self.category() == ActionCategory::Repair
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    GetIis,
    CheckSlack { name: String },
    RelaxConstraint { target: String, amount: f64 },
    DropConstraint { target: String },
    UpdateObj { target: String, value: f64 },
    UpdateBounds { target: String, lower: f64, upper: f64 },
    UpdateRhs { target: String, value: f64 },
    Submit,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::GetIis => ActionKind::GetIis,
            Action::CheckSlack { .. } => ActionKind::CheckSlack,
            Action::RelaxConstraint { .. } => ActionKind::RelaxConstraint,
            Action::DropConstraint { .. } => ActionKind::DropConstraint,
            Action::UpdateObj { .. } => ActionKind::UpdateObj,
            Action::UpdateBounds { .. } => ActionKind::UpdateBounds,
            Action::UpdateRhs { .. } => ActionKind::UpdateRhs,
            Action::Submit => ActionKind::Submit,
        }
    }

    pub fn is_repair(&self) -> bool {
        self.kind().category() == ActionCategory::Repair
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            Action::GetIis | Action::Submit => None,
            Action::CheckSlack { name } => Some(name),
            Action::RelaxConstraint { target, .. }
            | Action::DropConstraint { target }
            | Action::UpdateObj { target, .. }
            | Action::UpdateBounds { target, .. }
            | Action::UpdateRhs { target, .. } => Some(target),
        }
    }

    /// JSON object form, without reasoning or token fields.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "action": self.kind().name() });
        if let Some(t) = self.target() {
            v["target"] = json!(t);
        }
        match *self {
            Action::RelaxConstraint { amount: x, .. }
            | Action::UpdateObj { value: x, .. }
            | Action::UpdateRhs { value: x, .. } => v["value"] = json_number(x),
            Action::UpdateBounds { lower, upper, .. } => {
                v["value"] = json!([json_number(lower), json_number(upper)])
            }
            _ => {}
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self, ActionParseError> {
        let obj = v.as_object().ok_or_else(|| perr("action message must be a JSON object"))?;
        let kind_s = obj
            .get("action")
            .and_then(Value::as_str)
            .ok_or_else(|| perr("missing string field `action`"))?;
        // a full text action in the `action` field is accepted too
        if kind_s.contains('(') {
            return parse_action_text(kind_s);
        }
        let kind = ActionKind::from_name(kind_s).ok_or_else(|| perr(format!("unknown action `{kind_s}`")))?;
        let target = || -> Result<String, ActionParseError> {
            obj.get("target")
                .and_then(Value::as_str)
                .map(str::to_string)
                .filter(|s| !s.trim().is_empty())
                .ok_or_else(|| perr(format!("{} needs a string `target`", kind.name())))
        };
        let scalar = |v: Option<&Value>| -> Result<f64, ActionParseError> {
            match v {
                Some(v) => json_to_f64(v, false),
                None => Err(perr(format!("{} needs a numeric `value`", kind.name()))),
            }
        };
        Ok(match kind {
            ActionKind::GetIis => Action::GetIis,
            ActionKind::Submit => Action::Submit,
            ActionKind::CheckSlack => Action::CheckSlack { name: target()? },
            ActionKind::DropConstraint => Action::DropConstraint { target: target()? },
            ActionKind::RelaxConstraint => Action::RelaxConstraint {
                target: target()?,
                amount: scalar(obj.get("value").or_else(|| obj.get("amount")))?,
            },
            ActionKind::UpdateObj => Action::UpdateObj {
                target: target()?,
                value: scalar(obj.get("value"))?,
            },
            ActionKind::UpdateRhs => Action::UpdateRhs {
                target: target()?,
                value: scalar(obj.get("value"))?,
            },
            ActionKind::UpdateBounds => {
                let (lo, hi) = match (obj.get("value"), obj.get("lb"), obj.get("ub")) {
                    (Some(Value::Array(a)), _, _) if a.len() == 2 => (&a[0], &a[1]),
                    (_, Some(lo), Some(hi)) => (lo, hi),
                    _ => return Err(perr("UPDATE_BOUNDS needs `value: [lb, ub]`")),
                };
                Action::UpdateBounds {
                    target: target()?,
                    lower: json_to_f64(lo, true).map(|v| if v.is_nan() { f64::NEG_INFINITY } else { v })?,
                    upper: json_to_f64(hi, true).map(|v| if v.is_nan() { f64::INFINITY } else { v })?,
                }
            }
        })
    }
}

fn json_number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Numbers, numeric strings, and (for bounds) `null` meaning "unbounded", reported as NaN.
fn json_to_f64(v: &Value, allow_null: bool) -> Result<f64, ActionParseError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| perr("number out of range")),
        Value::String(s) => parse_number(s),
        Value::Null if allow_null => Ok(f64::NAN),
        other => Err(perr(format!("expected a number, got {other}"))),
    }
}

fn parse_number(s: &str) -> Result<f64, ActionParseError> {
    let t = s.trim().trim_matches(|c| c == '"' || c == '\'');
    let v = match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => f64::INFINITY,
        "-inf" | "-infinity" => f64::NEG_INFINITY,
        _ => t.parse::<f64>().map_err(|_| perr(format!("`{t}` is not a number")))?,
    };
    if v.is_nan() {
        return Err(perr("NaN is not a valid value"));
    }
    Ok(v)
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.kind().name();
        match self {
            Action::GetIis | Action::Submit => write!(f, "{k}()"),
            Action::CheckSlack { name: t } | Action::DropConstraint { target: t } => write!(f, "{k}({t})"),
            Action::RelaxConstraint { target, amount: x }
            | Action::UpdateObj { target, value: x }
            | Action::UpdateRhs { target, value: x } => write!(f, "{k}({target}, {})", fmt_num(*x)),
            Action::UpdateBounds { target, lower, upper } => {
                write!(f, "{k}({target}, {}, {})", fmt_num(*lower), fmt_num(*upper))
            }
        }
    }
}

fn call_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b([A-Z_]+)\s*\(([^()]*)\)").expect("static regex"))
}

/// Parses the last `KIND(args)` call in free text, preferring an `Action:` line.
/// Reasoning inside `<think>...</think>` is ignored.
pub fn parse_action_text(text: &str) -> Result<Action, ActionParseError> {
    let visible = match (text.find("<think>"), text.rfind("</think>")) {
        (Some(a), Some(b)) if b > a => format!("{}{}", &text[..a], &text[b + "</think>".len()..]),
        _ => text.to_string(),
    };
    let line = visible
        .lines()
        .rev()
        .find_map(|l| {
            let l = l.trim();
            let lower = l.to_ascii_lowercase();
            lower.find("action:").map(|i| l[i + "action:".len()..].trim().to_string())
        })
        .unwrap_or_else(|| visible.trim().to_string());
    let caps = call_regex()
        .captures_iter(&line)
        .filter(|c| ActionKind::from_name(&c[1]).is_some())
        .last()
        .ok_or_else(|| perr("no `KIND(args)` action found"))?;
    let kind = ActionKind::from_name(&caps[1]).expect("filtered");
    let args: Vec<String> = caps[2]
        .split(',')
        .map(|a| a.trim().trim_matches(|c| c == '"' || c == '\'').to_string())
        .filter(|a| !a.is_empty())
        .collect();
    let want = |n: usize| -> Result<(), ActionParseError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(perr(format!("{} takes {n} argument(s), got {}", kind.name(), args.len())))
        }
    };
    let num = |i: usize| parse_number(&args[i]);
    Ok(match kind {
        ActionKind::GetIis => {
            want(0)?;
            Action::GetIis
        }
        ActionKind::Submit => {
            want(0)?;
            Action::Submit
        }
        ActionKind::CheckSlack => {
            want(1)?;
            Action::CheckSlack { name: args[0].clone() }
        }
        ActionKind::DropConstraint => {
            want(1)?;
            Action::DropConstraint { target: args[0].clone() }
        }
        ActionKind::RelaxConstraint => {
            want(2)?;
            Action::RelaxConstraint {
                target: args[0].clone(),
                amount: num(1)?,
            }
        }
        ActionKind::UpdateObj => {
            want(2)?;
            Action::UpdateObj {
                target: args[0].clone(),
                value: num(1)?,
            }
        }
        ActionKind::UpdateRhs => {
            want(2)?;
            Action::UpdateRhs {
                target: args[0].clone(),
                value: num(1)?,
            }
        }
        ActionKind::UpdateBounds => {
            want(3)?;
            Action::UpdateBounds {
                target: args[0].clone(),
                lower: num(1)?,
                upper: num(2)?,
            }
        }
    })
}

/// Accepts either wire form: a JSON object, or free text with an action line.
pub fn parse_action(input: &str) -> Result<Action, ActionParseError> {
    let t = input.trim();
    if t.starts_with('{') {
        if let Ok(v) = serde_json::from_str::<Value>(t) {
            return Action::from_json(&v);
        }
    }
    parse_action_text(t)
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Action::from_json(&v).map_err(serde::de::Error::custom)
    }
}
