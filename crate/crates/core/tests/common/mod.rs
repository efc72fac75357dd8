pub mod vertex;

use chainfix::harness::{build_bundle, DatasetConfig, ProblemBundle, Split};
use chainfix::saboteur::ErrorType;

pub const SEED: u64 = 20_240_601;

/// A verified training bundle of the given type.
pub fn bundle(e: ErrorType, index: usize) -> ProblemBundle {
    build_bundle(&DatasetConfig::default(), Split::Train, e, index, SEED)
        .expect("bundle builds")
        .0
}
