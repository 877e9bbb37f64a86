//! Resilient control of nonlinear systems that have lost authority over some
//! of their actuators.
//!
//! The controller builds a linear driftless approximation at the initial
//! state, splits the horizon `[0, t_f]` into intervals that halve in length,
//! and holds one constant controlled input per interval. The
//! [`feasibility`] module checks when the inputs are guaranteed to respect
//! their bounds and computes the node error bounds; [`simulator`] runs the
//! closed loop against admissible or adversarial uncontrolled inputs.
//!
//! Batch runs use rayon when the `parallel` feature (on by default) is
//! enabled and fall back to sequential execution otherwise.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod controller;
pub mod error;
pub mod feasibility;
pub mod linalg;
pub mod par;
pub mod partition;
pub mod simulator;
pub mod system;
pub mod workflow;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
