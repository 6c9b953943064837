//! Resilience planning for power distribution networks exposed to wind
//! hazards.
//!
//! The crate builds a two-stage stochastic MILP: first-stage investments
//! (pole hardening, backup generators, sectionalizers) are chosen once, and
//! each sampled hazard scenario gets its own recourse block (switching,
//! generator dispatch, load shedding) over a linearized DistFlow network.
//! The deterministic equivalent is handed to an external or linked MILP
//! solver, and the result is decomposed into cost components and compared
//! against the do-nothing plan.

pub mod formulation;
pub mod hazard;
pub mod milp;
pub mod network;
pub mod num;
pub mod oracle;
pub mod report;
pub mod solver;

pub use num::Scalar;

/// Floating-point model used by the formulation and the solver adapters.
pub type ModelIR = milp::Model<f64>;
/// Exact model for zero-tolerance audits of small instances.
pub type ExactModel = milp::Model<num_rational::BigRational>;
pub type LinConstraint = milp::LinConstraint<f64>;
