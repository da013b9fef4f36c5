//! Sparse recovery with weakly convex penalties by the projected generalized
//! gradient method, its approximate-projection variant, the constants of its
//! convergence guarantees, and an experiment harness for phase-transition and
//! recovery-precision studies.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod penalty;
pub mod pinv;
pub mod solver;

pub use error::{Error, Result};
pub use penalty::{Penalty, PenaltyKind};
pub use pinv::{ProjMode, SensingModel};
pub use solver::{RecoveryResult, SolverConfig, TraceRecord};
