//! Pareto optimal risk sharing among agents endowed with distortion risk
//! measures, with linear transaction costs and optional regulator
//! constraints.
//!
//! The solver builds, for each agent, a normalized risk-load curve on the
//! probability axis and assigns each loss layer to the agent whose curve is
//! lowest there; the optimal allocation is a ladder of tranches. A
//! brute-force oracle verifies solutions on small discrete instances.

// `!(x > 0.0)`-style guards are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod config;
pub mod constrained;
pub mod distortion;
pub mod distribution;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod pareto;
pub mod pwl;
pub mod riskmeasure;
pub mod scalar;

pub use error::{CoreError, Result};
pub use scalar::Real;

/// Concrete `f64` aliases; the CLI and wire formats use IEEE doubles.
pub type Distortion = distortion::Distortion<f64>;
pub type LossModel = distribution::LossModel<f64>;
pub type AgentSpec = riskmeasure::AgentSpec<f64>;
pub type Ladder = allocation::Ladder<f64>;
pub type MonotonePwl = pwl::MonotonePwl<f64>;
pub type ConstraintSpec = constrained::ConstraintSpec<f64>;
pub type SolveReport = pareto::SolveReport;
