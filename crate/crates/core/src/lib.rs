//! MOVER confidence intervals for weighted differences and ratios of
//! stratified group parameters, with binary and time-to-event backends and a
//! Monte Carlo coverage harness.

pub mod binary;
pub mod error;
pub mod io;
pub mod mover;
pub mod normal;
pub mod sim;
pub mod survival;
pub mod types;
pub mod weights;

pub use error::{Error, Result};
pub use types::*;
