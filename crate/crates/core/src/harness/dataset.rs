use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bundle::{ProblemBundle, Split};
use super::HarnessError;
use crate::env::EnvConfig;
use crate::generator::{generate_accepted, render_nl_description, GeneratorConfig, GeneratorError};
use crate::lp::write_lp;
use crate::oracle::evaluate;
use crate::saboteur::{inject, tighten, verify, ErrorType, SaboteurError};
use crate::Solver;

/// Share of each type's bundles placed in the test split for `--count-per-type K`.
pub const TEST_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(self) -> usize {
        self.train + self.test
    }
}

/// Requested bundle counts per error type and split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPlan {
    pub counts: BTreeMap<ErrorType, SplitCounts>,
}

/// Train/test counts of the full-size dataset (692 / 284).
const FULL: [(usize, usize); 10] = [
    (78, 27),
    (89, 31),
    (87, 30),
    (89, 31),
    (71, 30),
    (40, 28),
    (66, 24),
    (71, 25),
    (56, 28),
    (45, 30),
];

fn split_k(k: usize) -> SplitCounts {
    let test = (k as f64 * TEST_FRACTION).round() as usize;
    SplitCounts { train: k - test, test }
}

impl CountPlan {
    pub fn per_type(k: usize) -> Self {
        CountPlan {
            counts: ErrorType::ALL.into_iter().map(|e| (e, split_k(k))).collect(),
        }
    }

    pub fn full() -> Self {
        CountPlan {
            counts: ErrorType::ALL
                .into_iter()
                .zip(FULL)
                .map(|(e, (train, test))| (e, SplitCounts { train, test }))
                .collect(),
        }
    }

    pub fn get(&self, e: ErrorType) -> SplitCounts {
        self.counts.get(&e).copied().unwrap_or(SplitCounts { train: 0, test: 0 })
    }

    pub fn totals(&self) -> SplitCounts {
        self.counts.values().fold(SplitCounts { train: 0, test: 0 }, |a, c| SplitCounts {
            train: a.train + c.train,
            test: a.test + c.test,
        })
    }
}

impl FromStr for CountPlan {
    type Err = HarnessError;

    /// `K` (per type, split 70/30), `full`, or `ME1=78/27,ME2=10,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(CountPlan::full());
        }
        if let Ok(k) = s.parse::<usize>() {
            return Ok(CountPlan::per_type(k));
        }
        let bad = |m: String| HarnessError::Config(format!("bad count plan `{s}`: {m}"));
        let mut counts = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (ty, val) = part.split_once('=').ok_or_else(|| bad(format!("`{part}` lacks `=`")))?;
            let e: ErrorType = ty.parse().map_err(bad)?;
            let num = |v: &str| v.trim().parse::<usize>().map_err(|_| bad(format!("`{v}` is not a count")));
            let c = match val.split_once('/') {
                Some((tr, te)) => SplitCounts {
                    train: num(tr)?,
                    test: num(te)?,
                },
                None => split_k(num(val)?),
            };
            counts.insert(e, c);
        }
        if counts.is_empty() {
            return Err(bad("empty".into()));
        }
        Ok(CountPlan { counts })
    }
}

impl fmt::Display for CountPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .counts
            .iter()
            .map(|(e, c)| format!("{e}={}/{}", c.train, c.test))
            .collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub generator: GeneratorConfig,
    pub env: EnvConfig,
    /// Source instances tried per bundle before giving up.
    pub max_attempts: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            generator: GeneratorConfig::default(),
            env: EnvConfig::default(),
            max_attempts: 400,
        }
    }
}

impl DatasetConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: DatasetConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.generator.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// Why source instances were discarded while building one bundle.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptStats {
    pub attempts: usize,
    pub calibration_failed: usize,
    pub baseline_irrational: usize,
    pub inapplicable: usize,
    pub verification_failed: usize,
}

impl AttemptStats {
    fn add(&mut self, o: &AttemptStats) {
        self.attempts += o.attempts;
        self.calibration_failed += o.calibration_failed;
        self.baseline_irrational += o.baseline_irrational;
        self.inapplicable += o.inapplicable;
        self.verification_failed += o.verification_failed;
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn bundle_seed(seed: u64, split: Split, e: ErrorType, i: usize) -> u64 {
    let tag = ((split as u64) << 48) | ((e.index() as u64) << 32) | i as u64;
    splitmix(seed ^ splitmix(tag))
}

/// Builds one verified bundle: sample an accepted instance, tighten it,
/// require its clean optimum to pass the error type's checks, inject, verify.
/// Discarded instances are counted by stage.
pub fn build_bundle(
    cfg: &DatasetConfig,
    split: Split,
    error: ErrorType,
    index: usize,
    seed: u64,
) -> Result<(ProblemBundle, AttemptStats), HarnessError> {
    let solver = Solver::new(cfg.env.solver);
    let mut stream = ChaCha8Rng::seed_from_u64(bundle_seed(seed, split, error, index));
    let mut stats = AttemptStats::default();
    while stats.attempts < cfg.max_attempts {
        stats.attempts += 1;
        let (inst, _, source) = match generate_accepted(&cfg.generator, stream.gen(), &solver) {
            Ok(r) => r,
            Err(GeneratorError::Exhausted { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let (tightened, tightening, baseline) = match tighten(&inst, &solver) {
            Ok(r) => r,
            Err(SaboteurError::Calibration(_)) => {
                stats.calibration_failed += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let clean = evaluate(&tightened, &baseline, &inst, error, &cfg.env.oracle)
            .map_err(|e| HarnessError::Pipeline(e.to_string()))?;
        if !clean.pass {
            stats.baseline_irrational += 1;
            continue;
        }
        let (model, record) = match inject(&tightened, &inst, &tightening, error, source, &solver, &cfg.env.oracle) {
            Ok(r) => r,
            Err(SaboteurError::Inapplicable { .. }) => {
                stats.inapplicable += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let nl = render_nl_description(&inst);
        let verification = verify(&model, &inst, &record, &nl, &cfg.env)?;
        if !verification.passed {
            stats.verification_failed += 1;
            continue;
        }
        let bundle = ProblemBundle {
            id: format!("{error}-{}-{index:04}", split.label()),
            source_id: format!("sc-{source:016x}"),
            split,
            error_type: error,
            difficulty: error.difficulty(),
            nl_description: nl,
            instance: inst,
            tightening,
            sabotage: record,
            verification,
        };
        return Ok((bundle, stats));
    }
    Err(HarnessError::Collapse {
        error,
        attempts: stats.attempts,
        detail: format!("{stats:?}"),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub per_type: BTreeMap<ErrorType, AttemptStats>,
}

/// Builds every bundle of the plan, in parallel, ordered by split, type and index.
pub fn build_dataset(
    cfg: &DatasetConfig,
    plan: &CountPlan,
    seed: u64,
) -> Result<(Vec<ProblemBundle>, BuildStats), HarnessError> {
    let mut tasks = Vec::new();
    for split in [Split::Train, Split::Test] {
        for e in ErrorType::ALL {
            let c = plan.get(e);
            let n = if split == Split::Train { c.train } else { c.test };
            tasks.extend((0..n).map(|i| (split, e, i)));
        }
    }
    let built: Vec<(ProblemBundle, AttemptStats)> = tasks
        .par_iter()
        .map(|&(split, e, i)| build_bundle(cfg, split, e, i, seed))
        .collect::<Result<_, _>>()?;
    let mut stats = BuildStats::default();
    let mut bundles = Vec::with_capacity(built.len());
    for (b, s) in built {
        stats.per_type.entry(b.error_type).or_default().add(&s);
        bundles.push(b);
    }
    check_disjoint(&bundles)?;
    Ok((bundles, stats))
}

/// Fails if any source instance appears in both splits or twice overall.
pub fn check_disjoint(bundles: &[ProblemBundle]) -> Result<(), HarnessError> {
    let mut seen = BTreeSet::new();
    for b in bundles {
        if !seen.insert(&b.source_id) {
            return Err(HarnessError::Pipeline(format!(
                "source instance {} is used by more than one bundle",
                b.source_id
            )));
        }
    }
    Ok(())
}

/// Writes `<id>.lp` for every bundle's sabotaged model into `dir`.
pub fn export_lp(bundles: &[ProblemBundle], dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for b in bundles {
        let model = b.rebuild_model()?;
        let path = dir.join(format!("{}.lp", b.id));
        let text = format!("\\ {} ({}), source {}\n{}", b.id, b.error_type.name(), b.source_id, write_lp(&model));
        std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}
