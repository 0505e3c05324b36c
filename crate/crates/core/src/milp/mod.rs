//! Mixed-binary linear encoding of max-product circuit evaluation, chance
//! programs built on it, LP export and a design-space solver.

mod encode;
mod lp;
mod model;
mod solve;

pub use encode::{
    add_design_indicators, encode_chance_constraint, encode_circuit, encode_into, log_epsilon,
    uniform_prior_denominator, DesignIndicators, EncodedCircuit, Orientation,
};
pub use lp::{export_lp, sanitized_names};
pub use model::{
    Constraint, MilpModel, Objective, ObjectiveSense, Sense, VarId, VarType, Variable,
};
pub use solve::{
    solve, solve_by_enumeration, ChanceProgram, Denominator, DenominatorMode, MilpSolution,
    SolveLimits, SolveStatus, FEASIBILITY_TOLERANCE,
};
