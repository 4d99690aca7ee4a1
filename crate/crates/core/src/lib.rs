//! Structure-preserving pseudo-spectral simulation of a two-species nematic
//! electrolyte on the periodic torus, with diagnostics that track the
//! energy law, the maximum principle, charge conservation and the director's
//! unit-ball confinement.

// `!(x >= 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod director;
pub mod driver;
pub mod electrostatics;
pub mod error;
pub mod fields;
mod kinematics;
pub mod flow;
pub mod model;
pub mod point;
pub mod transport;

#[cfg(test)]
mod testing;

pub use error::{Error, Result, StepRejection};
pub use model::{ModelParams, State};
