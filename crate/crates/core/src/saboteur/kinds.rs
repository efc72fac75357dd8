use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The ten classified modeling errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorType {
    ME1,
    ME2,
    ME3,
    ME4,
    ME5,
    ME6,
    ME7,
    ME8,
    ME9,
    ME10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl ErrorType {
    pub const ALL: [ErrorType; 10] = [
        ErrorType::ME1,
        ErrorType::ME2,
        ErrorType::ME3,
        ErrorType::ME4,
        ErrorType::ME5,
        ErrorType::ME6,
        ErrorType::ME7,
        ErrorType::ME8,
        ErrorType::ME9,
        ErrorType::ME10,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::ME1 => "demand inflation",
            ErrorType::ME2 => "lead time error",
            ErrorType::ME3 => "balance violation",
            ErrorType::ME4 => "capacity reduction",
            ErrorType::ME5 => "cost structure error",
            ErrorType::ME6 => "bullwhip amplification",
            ErrorType::ME7 => "coefficient perturbation",
            ErrorType::ME8 => "sign error",
            ErrorType::ME9 => "redundant constraint",
            ErrorType::ME10 => "index mismatch",
        }
    }

    /// Empirical difficulty label, kept as metadata only.
    pub fn difficulty(self) -> Difficulty {
        match self {
            ErrorType::ME3 | ErrorType::ME5 => Difficulty::Easy,
            ErrorType::ME1 | ErrorType::ME2 | ErrorType::ME4 | ErrorType::ME10 => Difficulty::Hard,
            _ => Difficulty::Medium,
        }
    }

    /// True for the one type that leaves the model feasible.
    pub fn keeps_feasibility(self) -> bool {
        self == ErrorType::ME5
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ME{}", self.index() + 1)
    }
}

impl FromStr for ErrorType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase().replace('-', "");
        ErrorType::ALL
            .into_iter()
            .find(|e| e.to_string() == t)
            .ok_or_else(|| format!("unknown error type `{s}` (expected ME1..ME10)"))
    }
}
