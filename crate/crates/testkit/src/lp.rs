//! Solves a [`MilpModel`] with `microlp`, an independent MILP solver.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use spnplan_core::milp::{MilpModel, Sense, VarId, VarType};

/// Proven optimum of `target` with some variables pinned; `None` when
/// microlp finds no optimal solution.
pub fn optimize(
    model: &MilpModel,
    target: VarId,
    maximize: bool,
    pinned: &[(VarId, f64)],
) -> Option<f64> {
    let dir = if maximize {
        OptimizationDirection::Maximize
    } else {
        OptimizationDirection::Minimize
    };
    let mut p = Problem::new(dir);
    let vars: Vec<_> = model
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let obj = if i == target { 1.0 } else { 0.0 };
            if let Some(&(_, x)) = pinned.iter().find(|(j, _)| *j == i) {
                p.add_var(obj, (x, x))
            } else if v.kind == VarType::Binary {
                p.add_binary_var(obj)
            } else {
                p.add_var(obj, (v.lower, v.upper))
            }
        })
        .collect();
    for c in &model.constraints {
        let terms: Vec<_> = c.terms.iter().map(|&(v, k)| (vars[v], k)).collect();
        let op = match c.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(&terms, op, c.rhs);
    }
    let out = p.solve().ok()?;
    if !out.is_optimal() {
        return None;
    }
    out.into_solution().ok().map(|s| s.objective())
}
