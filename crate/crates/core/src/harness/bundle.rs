use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::env::{EnvConfig, Problem};
use crate::saboteur::{self, Difficulty, ErrorType, SabotageRecord, SaboteurError, Tightening, Verification};
use crate::sc::ScInstance;
use crate::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn label(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// One verified problem. The sabotaged model is rebuilt from the instance,
/// the tightening and the perturbation recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemBundle {
    pub id: String,
    /// Identifies the sampled supply chain; never shared across splits.
    pub source_id: String,
    pub split: Split,
    pub error_type: ErrorType,
    pub difficulty: Difficulty,
    pub nl_description: String,
    pub instance: ScInstance,
    pub tightening: Tightening,
    pub sabotage: SabotageRecord,
    pub verification: Verification,
}

impl ProblemBundle {
    pub fn rebuild_model(&self) -> Result<Model, SaboteurError> {
        saboteur::rebuild(&self.instance, &self.tightening, &self.sabotage.perturbation)
    }

    pub fn to_problem(&self) -> Result<Problem, SaboteurError> {
        Ok(Problem {
            id: self.id.clone(),
            error_type: self.error_type,
            nl_description: self.nl_description.clone(),
            instance: self.instance.clone(),
            model: self.rebuild_model()?,
            gt_iis: self.sabotage.gt_iis.clone(),
        })
    }

    /// Rebuilds the model and runs the full verification again.
    pub fn reverify(&self, env: &EnvConfig) -> Result<Verification, SaboteurError> {
        let model = self.rebuild_model()?;
        saboteur::verify(&model, &self.instance, &self.sabotage, &self.nl_description, env)
    }
}

/// Reads a JSONL file. A truncated final line (from an interrupted append) is skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let lines: Vec<String> = BufReader::new(f)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::io(path, e))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            Err(_) if Some(i) == last => log::warn!("{}: skipping truncated last line", path.display()),
            Err(e) => {
                return Err(HarnessError::Format {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(f);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| HarnessError::Serialize(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn load_bundles(path: &Path) -> Result<Vec<ProblemBundle>, HarnessError> {
    read_jsonl(path)
}
