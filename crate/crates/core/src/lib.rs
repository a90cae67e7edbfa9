//! Solvers for hierarchical equilibrium problems: find an equilibrium of an
//! upper-level bifunction `G` over the equilibrium set of a lower-level
//! bifunction `F`, using relaxed inertial proximal splitting.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifunction;
pub mod cli;
pub mod geometry;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod report;
pub mod resolvent;
pub mod sampling;
pub mod schedule;
pub mod solver;
