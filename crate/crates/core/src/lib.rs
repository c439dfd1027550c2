//! Planning, flight control and energy accounting for a wall-climbing robot
//! hanging from two ropes.
//!
//! The robot is modelled as a point mass on two ropes anchored at the top of
//! the wall. Its configuration is `(psi, l1, l2)`: the angle of the plane
//! containing both ropes about the anchor line and the two rope lengths.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod energy;
mod error;
pub mod integrator;
pub mod model;
pub mod mpc;
pub mod optim;
pub mod planner;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use integrator::{IntegratorConfig, Method};
pub use model::{ControlInput, ReducedState};
pub use scenario::{Ellipsoid, Scenario, Vec3};
