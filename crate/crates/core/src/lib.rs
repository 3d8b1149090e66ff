//! Data-driven set-membership filtering for unknown linear time-invariant
//! systems under bounded measurement noise.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod config;
pub mod data;
pub mod error;
pub mod filter;
pub mod history;
pub mod identify;
pub mod kalman;
pub mod metrics;
pub mod pipeline;
pub mod lp;
pub mod polytope;
pub mod sim;

pub use error::{Error, LpError, Result};
