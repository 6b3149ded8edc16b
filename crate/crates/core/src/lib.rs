//! SOFIM: stochastic optimization with a regularized rank-one Fisher
//! information matrix, inverted in closed form with Sherman-Morrison.
//!
//! The crate also carries the reference optimizers and test problems used to
//! check it, and a small harness for running comparisons.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod problems;
pub mod sofim;
pub mod vector;

pub use error::{Error, Result};
pub use sofim::{
    bias_correct, first_moment_update, sherman_morrison_inverse_apply, sofim_direction, sofim_step,
    SofimConfig, SofimState,
};
pub use vector::{GradientVector, ParamVector};
