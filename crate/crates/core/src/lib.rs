//! Sum-product circuits learned from simulated PV + battery adequacy data,
//! embedded in a mixed-binary program for least-cost chance-constrained
//! investment planning.

pub mod circuit;
pub mod error;
pub mod learn;
pub mod milp;
pub mod planner;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::{Scalar, LOG_PROB_FLOOR};

pub type CircuitF64 = circuit::Circuit<f64>;
pub type CircuitF32 = circuit::Circuit<f32>;
pub type MilpModelF64 = milp::MilpModel<f64>;
pub type MilpModelF32 = milp::MilpModel<f32>;
