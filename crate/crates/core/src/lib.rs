//! Dual-quaternion 6-DOF tracking control.
//!
//! - [`algebra`]: quaternions, dual quaternions, dual vectors, 8×8 block matrices.
//! - [`dynamics`]: dual inertia, tracking-error dynamics, reference trajectories.
//! - [`controller`]: the normalized feedback law and an unnormalized baseline.
//! - [`stability`]: Lyapunov functions, envelope and ISS constants, verdicts.
//! - [`safety`]: control barrier functions and the force-filter QP.
//! - [`sim`]: RK4 integration, Monte Carlo sampling, scenarios, fuel.
//! - [`cli`]: the `dqtrack` command line.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod safety;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
