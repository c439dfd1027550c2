//! Static feasibility of a rope-suspended robot resting on a wall: contact
//! force polytopes, their Minkowski sum in wrench space and directional
//! margins of the gravitational wrench.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fwp;
pub mod polytope;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WrenchError {
    #[error("point set spans {rank} of {dim} dimensions; the polytope is flat")]
    Degenerate { rank: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty point set")]
    Empty,
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
    #[error(transparent)]
    Core(#[from] ropeclimb_core::Error),
}

pub type Result<T> = std::result::Result<T, WrenchError>;

pub use fwp::{axis_direction, build_fwp, contact_geometry, feasibility, gravitational_wrench, margin_heatmap, ContactSet, Fwp, GridSpec, HeatCell, Heatmap, Limits, Wrench};
pub use polytope::{convex_hull, directional_margin, minkowski_sum, v_to_h, HPolytope, Margin, MarginStatus, VPolytope};
