//! Dense two-phase simplex, IIS extraction and the canonical LP text format.

pub mod iis;
pub mod model;
pub(crate) mod simplex;
pub mod solve;
pub mod text;

pub use iis::{check_iis, compute_iis, BoundMember, BoundSide, IisCertificate, IisCheck};
pub use model::{matches_prefix, Constraint, LpModel, ModelError, Sense, Variable};
pub use simplex::PivotRule;
pub use solve::{check_slack, near_misses, LpError, SolveOutcome, SolveStatus, Solver, SolverOptions};
pub use text::{parse_lp, write_lp, ParseError};
