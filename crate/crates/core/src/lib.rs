//! Closed-loop diagnosis and repair of multi-echelon supply chain LPs.
//!
//! The solver core is generic over [`Scalar`] (`f32` or `f64`); the supply
//! chain, saboteur, oracle and environment layers work on the `f64` aliases
//! below.

pub mod agents;
pub mod env;
pub mod generator;
pub mod harness;
pub mod lp;
pub mod oracle;
pub mod saboteur;
pub mod scalar;
pub mod sc;

pub use scalar::Scalar;

pub type Model = lp::LpModel<f64>;
pub type Outcome = lp::SolveOutcome<f64>;
pub type Certificate = lp::IisCertificate<f64>;
pub type Solver = lp::Solver<f64>;
pub type SolverOptions = lp::SolverOptions<f64>;
