//! Test support: random circuits, a naive evaluator, brute-force
//! enumeration and an external MILP solver bridge.

pub mod checks;
pub mod lp;
pub mod naive;
pub mod plan;
pub mod random;

pub use random::{random_circuit, random_circuit_over, random_simplex, Shape};
