//! Robust optimal dividend, proportional reinsurance and capital injection
//! for two collaborating insurance lines under model ambiguity.
//!
//! The crate computes the closed-form equilibrium (value function, barrier,
//! reinsurance threshold and worst-case distortion), checks it against the
//! HJB equation, and validates it by Monte Carlo.

// `!(x > 0.0)` is how NaN gets rejected along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod error;
pub mod model;
pub mod psi;
pub mod report;
pub mod reproduce;
pub mod simulator;
pub mod sweep;
pub mod verify;

pub use closed_form::{solve, ClosedFormSolution, RegimeTag, StrategyPoint};
pub use error::{Error, Result};
pub use model::{ModelParams, RawParams};
