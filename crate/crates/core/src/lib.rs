//! Linear-bandit simulation toolkit.
//!
//! Simulates low-regret linear bandit policies (OFUL, linear Thompson
//! sampling) on continuous action sets and measures how the minimum
//! eigenvalue of the design matrix grows with the number of rounds, together
//! with numerical checkers for the perturbation arguments behind that growth,
//! a norm-adaptive epoch-doubling OFUL, and threshold clustering of agents
//! from their final estimates.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod actionspace;
pub mod bandit;
pub mod clustering;
pub mod error;
pub mod fmt;
pub mod harness;
pub mod linalg;
pub mod model_selection;
pub mod policies;
pub mod spectral;

pub use error::{Error, Result};
