//! Counterfactual optimization.
//!
//! Solves convex programs `min f₀(x) s.t. fᵢ(x) ≤ sᵢ` while tuning the
//! specification `s` to the compromise where the marginal cost of relaxing a
//! constraint equals the marginal performance it buys. Includes brute-force
//! verification oracles, a condensed finite-horizon control builder with an
//! LQR baseline, and a friction-terrain MPC simulation.

// argument checks are written `!(x > 0.0)` so that NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod control;
pub mod error;
pub mod problem;
pub mod fixtures;
pub mod oracle;
pub mod solver;
pub mod terrain;
mod vector_serde;

pub use error::{Error, Result};
