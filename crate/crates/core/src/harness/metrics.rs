use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::EpisodeResult;
use crate::saboteur::ErrorType;

pub const Z95: f64 = 1.96;

/// Wilson score interval for `k` successes in `n` trials. `(0, 1)` when `n == 0`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the interval always contains p; clamp away rounding at k = 0 and k = n
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(successes: usize, trials: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, Z95);
        Proportion {
            successes,
            trials,
            value: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
            ci_low,
            ci_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub episodes: usize,
    /// Final model solves to optimality.
    pub rr: Proportion,
    /// Optimal and rational.
    pub rrr: Proportion,
    /// Rational among recovered episodes; undefined when nothing recovered.
    pub p2_pass: Option<Proportion>,
    pub mean_steps: f64,
    pub mean_tokens: f64,
    pub mean_reward: f64,
    pub mean_composite: f64,
    pub mean_diagnosis_accuracy: f64,
}

impl GroupMetrics {
    pub fn from_results<'a>(results: impl IntoIterator<Item = &'a EpisodeResult>) -> Self {
        let rs: Vec<&EpisodeResult> = results.into_iter().collect();
        let n = rs.len();
        let recovered = rs.iter().filter(|r| r.recovered()).count();
        let rational = rs.iter().filter(|r| r.recovered() && r.rational).count();
        let mean = |f: &dyn Fn(&EpisodeResult) -> f64| {
            if n == 0 {
                0.0
            } else {
                rs.iter().map(|r| f(r)).sum::<f64>() / n as f64
            }
        };
        GroupMetrics {
            episodes: n,
            rr: Proportion::new(recovered, n),
            rrr: Proportion::new(rational, n),
            p2_pass: (recovered > 0).then(|| Proportion::new(rational, recovered)),
            mean_steps: mean(&|r| r.steps_used as f64),
            mean_tokens: mean(&|r| r.token_count as f64),
            mean_reward: mean(&|r| r.reward_total),
            mean_composite: mean(&|r| r.composite.total),
            mean_diagnosis_accuracy: mean(&|r| r.composite.diagnosis_accuracy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub agents: Vec<String>,
    pub overall: GroupMetrics,
    /// Every error type appears, with zero episodes if none were run.
    pub per_type: BTreeMap<ErrorType, GroupMetrics>,
}

pub fn compute_metrics(results: &[EpisodeResult]) -> MetricsReport {
    let mut agents: Vec<String> = results.iter().map(|r| r.agent.clone()).collect();
    agents.sort();
    agents.dedup();
    let per_type = ErrorType::ALL
        .into_iter()
        .map(|e| (e, GroupMetrics::from_results(results.iter().filter(|r| r.error_type == e))))
        .collect();
    MetricsReport {
        agents,
        overall: GroupMetrics::from_results(results),
        per_type,
    }
}
