//! Power and sample-size calculations for Wald tests in generalized linear
//! models, built on two effect-size measures: `phi`, twice the standard
//! deviation of the part of the linear predictor that the predictors add
//! beyond the adjustors, and a partial pseudo-R^2 on the outcome scale.
//!
//! The crate also computes the exact per-observation noncentrality `f2` for
//! fully specified designs and measures how far each approximation is from
//! it, both over Monte Carlo scenario grids with a Latin hypercube
//! sensitivity study and by simulating the Wald test in finite samples.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod effect;
pub mod error;
pub mod family;
pub mod finite;
pub mod glm;
mod linalg;
pub mod par;
pub mod pss;
pub mod random;
pub mod sim;
pub mod special;

pub use effect::{DesignDraws, EffectSummary, W1Convention};
pub use error::{Error, Result};
pub use family::{Family, FamilyLink, Link, LinkValues};
pub use finite::EmpiricalDesign;
pub use glm::{FitResult, WaldTest};
pub use random::RngStream;
pub use sim::ScenarioConfig;
