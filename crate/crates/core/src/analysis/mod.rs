//! Convergence constants, error bounds and small-instance oracles.

mod constants;
mod oracles;

pub use constants::*;
pub use oracles::*;
