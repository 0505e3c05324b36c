//! Branch-and-bound specialised to chance programs.
//!
//! Once every design indicator is fixed, the selectors and node outputs of
//! an [`Orientation::Exact`] encoding are determined by one max-product
//! pass, so the search only branches on design variables. Partial designs
//! are pruned by cost and by interval bounds on the two root outputs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encode::{
    add_design_indicators, encode_chance_constraint, encode_into, log_epsilon,
    uniform_prior_denominator, DesignIndicators, EncodedCircuit, Orientation,
};
use super::model::{MilpModel, ObjectiveSense, VarId};
use crate::circuit::{Circuit, Evidence, Value};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Absolute tolerance on constraint residuals.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

/// Costs closer than this are treated as equal.
const COST_TIE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DenominatorMode {
    /// Encode `TPM(x)` with a second copy of the circuit.
    Circuit,
    /// Replace `TPM(x)` by the uniform design prior `1 / cells`.
    UniformPrior { cells: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "F: Scalar", rename_all = "snake_case", tag = "kind")]
pub enum Denominator<F = f64> {
    Circuit(EncodedCircuit<F>),
    UniformPrior { cells: usize },
}

/// `min cost(x)  s.t.  TPM(x, target) / TPM(x) ≤ ε` over a discrete design
/// domain, with both circuit evaluations replaced by max-product values.
#[derive(Clone, Debug)]
pub struct ChanceProgram<F: Scalar = f64> {
    pub model: MilpModel<F>,
    pub circuit: Circuit<F>,
    pub indicators: DesignIndicators,
    pub numerator: EncodedCircuit<F>,
    pub denominator: Denominator<F>,
    pub epsilon: f64,
}

impl<F: Scalar> ChanceProgram<F> {
    /// `domain` maps each free design variable to its allowed categories;
    /// `target` is the event whose probability is bounded (e.g. `y = 1`) and
    /// `context` any further fixed evidence shared by both circuits.
    pub fn build(
        circuit: &Circuit<F>,
        domain: &BTreeMap<usize, Vec<usize>>,
        target: &Evidence<F>,
        context: &Evidence<F>,
        epsilon: f64,
        mode: DenominatorMode,
    ) -> Result<Self> {
        log_epsilon(epsilon)?;
        let mut model = MilpModel::new();
        let indicators = add_design_indicators(&mut model, circuit, domain)?;
        let joint = target.union(context)?;
        let numerator = encode_into(
            &mut model,
            circuit,
            &indicators,
            &joint,
            Orientation::Exact,
            "num",
        )?;
        let denominator = match mode {
            DenominatorMode::Circuit => {
                let den = encode_into(
                    &mut model,
                    circuit,
                    &indicators,
                    context,
                    Orientation::Exact,
                    "den",
                )?;
                encode_chance_constraint(&mut model, &numerator, &den, epsilon)?;
                Denominator::Circuit(den)
            }
            DenominatorMode::UniformPrior { cells } => {
                uniform_prior_denominator(&mut model, &numerator, cells, epsilon)?;
                Denominator::UniformPrior { cells }
            }
        };
        Ok(Self {
            model,
            circuit: circuit.clone(),
            indicators,
            numerator,
            denominator,
            epsilon,
        })
    }

    /// Minimizes `Σ cost[j][k]·d_{j,k}`; `costs[j]` is indexed by category.
    pub fn set_costs(&mut self, costs: &BTreeMap<usize, Vec<f64>>) -> Result<()> {
        let mut terms = Vec::new();
        for (&j, ids) in &self.indicators.vars {
            let table = costs
                .get(&j)
                .ok_or_else(|| Error::InvalidModel(format!("no costs for design variable {j}")))?;
            for &(k, d) in ids {
                let c = *table.get(k).ok_or_else(|| {
                    Error::InvalidModel(format!("no cost for category {k} of variable {j}"))
                })?;
                if c != 0.0 {
                    terms.push((d, F::of(c)));
                }
            }
        }
        self.model.set_objective(ObjectiveSense::Minimize, terms)
    }

    /// Free design variables, ascending; designs are category vectors in
    /// this order.
    pub fn design_vars(&self) -> Vec<usize> {
        self.indicators.vars.keys().copied().collect()
    }

    pub fn design_evidence(&self, base: &Evidence<F>, design: &[usize]) -> Evidence<F> {
        let mut ev = base.clone();
        for (&j, &k) in self.indicators.vars.keys().zip(design) {
            ev.set(j, Some(Value::Category(k)));
        }
        ev
    }

    /// Max-product log-values of the numerator and denominator at `design`.
    pub fn log_terms(&self, design: &[usize]) -> Result<(F, F)> {
        let num = self
            .circuit
            .evaluate_max(&self.design_evidence(&self.numerator.evidence, design))?
            .log_value;
        let den = match &self.denominator {
            Denominator::Circuit(enc) => {
                self.circuit
                    .evaluate_max(&self.design_evidence(&enc.evidence, design))?
                    .log_value
            }
            Denominator::UniformPrior { cells } => F::of(-(*cells as f64).ln()),
        };
        Ok((num, den))
    }

    pub fn is_feasible(&self, design: &[usize]) -> Result<bool> {
        let (num, den) = self.log_terms(design)?;
        Ok((num - den).as_f64() <= self.epsilon.ln() + FEASIBILITY_TOLERANCE)
    }

    /// Objective value of a design.
    pub fn cost(&self, design: &[usize]) -> f64 {
        let mut x = vec![F::zero(); self.model.variables.len()];
        for (ids, &k) in self.indicators.vars.values().zip(design) {
            if let Some(&(_, d)) = ids.iter().find(|&&(kk, _)| kk == k) {
                x[d] = F::one();
            }
        }
        self.model.objective_value(&x).as_f64()
    }

    /// Full assignment of every model variable for a design.
    pub fn assignment(&self, design: &[usize]) -> Result<Vec<F>> {
        let mut x = vec![F::zero(); self.model.variables.len()];
        for (ids, &k) in self.indicators.vars.values().zip(design) {
            let &(_, d) = ids.iter().find(|&&(kk, _)| kk == k).ok_or_else(|| {
                Error::InvalidModel(format!("category {k} outside the design domain"))
            })?;
            x[d] = F::one();
        }
        let mut fill = |enc: &EncodedCircuit<F>| -> Result<()> {
            let eval = self
                .circuit
                .evaluate_max(&self.design_evidence(&enc.evidence, design))?;
            for (n, &o) in enc.node_outputs.iter().enumerate() {
                x[o] = eval.node_values[n];
            }
            for (&n, ms) in &enc.selectors {
                let active = eval.active[n].unwrap_or(0);
                for (a, &m) in ms.iter().enumerate() {
                    x[m] = if a == active { F::zero() } else { F::one() };
                }
            }
            Ok(())
        };
        fill(&self.numerator)?;
        if let Denominator::Circuit(enc) = &self.denominator {
            fill(enc)?;
        }
        Ok(x)
    }

    /// JSON dump of the model with its big-M table, for debugging.
    pub fn dump_json(&self) -> Result<String> {
        #[derive(Serialize)]
        #[serde(bound = "F: Scalar")]
        struct Dump<'a, F: Scalar> {
            epsilon: f64,
            model: &'a MilpModel<F>,
            numerator: &'a EncodedCircuit<F>,
            denominator: &'a Denominator<F>,
        }
        Ok(serde_json::to_string_pretty(&Dump {
            epsilon: self.epsilon,
            model: &self.model,
            numerator: &self.numerator,
            denominator: &self.denominator,
        })?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveLimits {
    pub max_nodes: usize,
    pub time_budget: Option<Duration>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            max_nodes: 1_000_000,
            time_budget: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    BoundLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution<F = f64> {
    pub status: SolveStatus,
    /// Value per model variable; empty without an incumbent.
    pub assignment: Vec<F>,
    pub objective_value: Option<f64>,
    /// Diagnostic only: varies with thread scheduling.
    pub node_count: usize,
    /// Chosen category per free design variable, ascending variable order.
    pub design: Option<Vec<usize>>,
}

impl<F: Scalar> MilpSolution<F> {
    pub fn value(&self, model: &MilpModel<F>, name: &str) -> Option<F> {
        model
            .var_by_name(name)
            .and_then(|v| self.assignment.get(v).copied())
    }
}

#[derive(Clone, Debug)]
struct Incumbent {
    cost: f64,
    units: usize,
    design: Vec<usize>,
}

/// Lower cost wins; near-equal costs prefer fewer units, then the
/// lexicographically smaller design.
fn better(a: &Incumbent, b: &Incumbent) -> bool {
    if (a.cost - b.cost).abs() > COST_TIE {
        return a.cost < b.cost;
    }
    (a.units, &a.design) < (b.units, &b.design)
}

struct Search<'a, F: Scalar> {
    program: &'a ChanceProgram<F>,
    /// Per free variable: allowed categories and their costs.
    levels: Vec<Vec<(usize, f64)>>,
    /// `rest[i]` = cheapest completion cost of levels `i..`.
    rest: Vec<f64>,
    log_eps: f64,
    best: Mutex<Option<Incumbent>>,
    best_cost: AtomicU64,
    nodes: AtomicUsize,
    stopped: AtomicBool,
    limits: &'a SolveLimits,
    start: Instant,
}

#[derive(PartialEq)]
struct Open {
    bound: f64,
    prefix: Vec<usize>,
}

impl Eq for Open {}

impl Ord for Open {
    // BinaryHeap pops the greatest: invert so the lowest bound, then the
    // lexicographically smallest prefix, comes first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.prefix.cmp(&self.prefix))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<F: Scalar> Search<'_, F> {
    fn incumbent_cost(&self) -> f64 {
        f64::from_bits(self.best_cost.load(AtomicOrdering::Acquire))
    }

    fn offer(&self, cand: Incumbent) {
        let mut guard = self.best.lock().expect("incumbent lock");
        if guard.as_ref().is_none_or(|b| better(&cand, b)) {
            self.best_cost
                .store(cand.cost.to_bits(), AtomicOrdering::Release);
            *guard = Some(cand);
        }
    }

    fn out_of_budget(&self) -> bool {
        let n = self.nodes.fetch_add(1, AtomicOrdering::Relaxed) + 1;
        let over = n > self.limits.max_nodes
            || self
                .limits
                .time_budget
                .is_some_and(|b| self.start.elapsed() > b);
        if over {
            self.stopped.store(true, AtomicOrdering::Relaxed);
        }
        over
    }

    /// Extends a prefix through levels that have a single option.
    fn autofix(&self, mut prefix: Vec<usize>) -> Vec<usize> {
        while prefix.len() < self.levels.len() && self.levels[prefix.len()].len() == 1 {
            prefix.push(0);
        }
        prefix
    }

    fn cost_of(&self, prefix: &[usize]) -> f64 {
        prefix
            .iter()
            .enumerate()
            .map(|(i, &o)| self.levels[i][o].1)
            .sum()
    }

    fn categories(&self, prefix: &[usize]) -> Vec<usize> {
        prefix
            .iter()
            .enumerate()
            .map(|(i, &o)| self.levels[i][o].0)
            .collect()
    }

    /// `false` when no completion of `prefix` can satisfy the constraint.
    fn may_be_feasible(&self, prefix: &[usize]) -> bool {
        let p = self.program;
        let vars = p.design_vars();
        let fixed = self.categories(prefix);
        let mut free = BTreeMap::new();
        for (i, &j) in vars.iter().enumerate().skip(prefix.len()) {
            free.insert(
                j,
                self.levels[i].iter().map(|&(k, _)| k).collect::<Vec<_>>(),
            );
        }
        let fix = |base: &Evidence<F>| {
            let mut ev = p.design_evidence(base, &[]);
            for (&j, &k) in vars.iter().zip(&fixed) {
                ev.set(j, Some(Value::Category(k)));
            }
            ev
        };
        let root = p.circuit.root();
        let num_lb = p
            .circuit
            .node_output_bounds_restricted(&free, &fix(&p.numerator.evidence))[root]
            .lower;
        let den_ub = match &p.denominator {
            Denominator::Circuit(enc) => {
                p.circuit
                    .node_output_bounds_restricted(&free, &fix(&enc.evidence))[root]
                    .upper
            }
            Denominator::UniformPrior { cells } => F::of(-(*cells as f64).ln()),
        };
        (num_lb - den_ub).as_f64() <= self.log_eps + FEASIBILITY_TOLERANCE
    }

    fn explore(&self, start: Vec<usize>) -> Result<()> {
        let mut open = BinaryHeap::new();
        let start = self.autofix(start);
        open.push(Open {
            bound: self.cost_of(&start) + self.rest[start.len()],
            prefix: start,
        });
        while let Some(Open { bound, prefix }) = open.pop() {
            if self.stopped.load(AtomicOrdering::Relaxed) || self.out_of_budget() {
                return Ok(());
            }
            if bound > self.incumbent_cost() + COST_TIE {
                continue;
            }
            if prefix.len() == self.levels.len() {
                let design = self.categories(&prefix);
                if self.program.is_feasible(&design)? {
                    self.offer(Incumbent {
                        cost: bound,
                        units: design.iter().sum(),
                        design,
                    });
                }
                continue;
            }
            if !self.may_be_feasible(&prefix) {
                continue;
            }
            let depth = prefix.len();
            let spent = self.cost_of(&prefix);
            for o in 0..self.levels[depth].len() {
                let mut child = prefix.clone();
                child.push(o);
                let child = self.autofix(child);
                let b = spent
                    + self.levels[depth][o].1
                    + self.cost_of_range(depth + 1, &child)
                    + self.rest[child.len()];
                if b <= self.incumbent_cost() + COST_TIE {
                    open.push(Open {
                        bound: b,
                        prefix: child,
                    });
                }
            }
        }
        Ok(())
    }

    /// Cost of the options in `prefix[from..]`.
    fn cost_of_range(&self, from: usize, prefix: &[usize]) -> f64 {
        (from..prefix.len())
            .map(|i| self.levels[i][prefix[i]].1)
            .sum()
    }
}

/// Solves a chance program by branch-and-bound over its design variables.
///
/// The returned design is optimal under the max-product constraint; among
/// near-equal costs it has the fewest units, then the smallest category
/// vector. Subtrees below the first design variable are searched in
/// parallel; the optimum does not depend on scheduling.
pub fn solve<F: Scalar>(
    program: &ChanceProgram<F>,
    limits: &SolveLimits,
) -> Result<MilpSolution<F>> {
    let costs: BTreeMap<VarId, f64> = program
        .model
        .objective
        .terms
        .iter()
        .map(|&(v, c)| (v, c.as_f64()))
        .collect();
    let flipped = program.model.objective.sense == ObjectiveSense::Maximize;
    let indicator_ids: std::collections::BTreeSet<VarId> = program
        .indicators
        .vars
        .values()
        .flatten()
        .map(|&(_, d)| d)
        .collect();
    if let Some(v) = costs.keys().find(|v| !indicator_ids.contains(v)) {
        return Err(Error::InvalidModel(format!(
            "objective uses `{}`, which is not a design indicator",
            program.model.variables[*v].name
        )));
    }
    let sign = if flipped { -1.0 } else { 1.0 };
    let mut levels: Vec<Vec<(usize, f64)>> = program
        .indicators
        .vars
        .values()
        .map(|ids| {
            ids.iter()
                .map(|&(k, d)| (k, sign * costs.get(&d).copied().unwrap_or(0.0)))
                .collect()
        })
        .collect();
    // Cheapest options first so best-bound order is also a natural DFS order.
    for level in &mut levels {
        level.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    }
    let mut rest = vec![0.0; levels.len() + 1];
    for i in (0..levels.len()).rev() {
        rest[i] = rest[i + 1] + levels[i].iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    }

    let search = Search {
        program,
        levels,
        rest,
        log_eps: program.epsilon.ln(),
        best: Mutex::new(None),
        best_cost: AtomicU64::new(f64::INFINITY.to_bits()),
        nodes: AtomicUsize::new(0),
        stopped: AtomicBool::new(false),
        limits,
        start: Instant::now(),
    };

    let root = search.autofix(Vec::new());
    if root.len() == search.levels.len() || search.levels.is_empty() {
        search.explore(root)?;
    } else if search.out_of_budget() {
        // Root counted; nothing else explored.
    } else if search.may_be_feasible(&root) {
        let depth = root.len();
        (0..search.levels[depth].len())
            .into_par_iter()
            .map(|o| {
                let mut child = root.clone();
                child.push(o);
                search.explore(child)
            })
            .collect::<Result<Vec<()>>>()?;
    }

    let best = search.best.into_inner().expect("incumbent lock");
    let stopped = search.stopped.load(AtomicOrdering::Relaxed);
    let node_count = search
        .nodes
        .load(AtomicOrdering::Relaxed)
        .min(limits.max_nodes.max(1));
    let status = match (&best, stopped) {
        (_, true) => SolveStatus::BoundLimit,
        (Some(_), false) => SolveStatus::Optimal,
        (None, false) => SolveStatus::Infeasible,
    };
    Ok(match best {
        Some(inc) => MilpSolution {
            status,
            assignment: program.assignment(&inc.design)?,
            objective_value: Some(program.cost(&inc.design)),
            node_count,
            design: Some(inc.design),
        },
        None => MilpSolution {
            status,
            assignment: Vec::new(),
            objective_value: None,
            node_count,
            design: None,
        },
    })
}

/// Reference solver: checks every design in the domain.
pub fn solve_by_enumeration<F: Scalar>(program: &ChanceProgram<F>) -> Result<Option<Vec<usize>>> {
    let domains: Vec<Vec<usize>> = program.indicators.domain().into_values().collect();
    let mut best: Option<Incumbent> = None;
    let mut design = vec![0usize; domains.len()];
    let mut idx = vec![0usize; domains.len()];
    loop {
        for (i, d) in domains.iter().enumerate() {
            design[i] = d[idx[i]];
        }
        if program.is_feasible(&design)? {
            let cand = Incumbent {
                cost: program.cost(&design),
                units: design.iter().sum(),
                design: design.clone(),
            };
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
        // Odometer increment over the mixed-radix domain.
        let mut i = domains.len();
        loop {
            if i == 0 {
                return Ok(best.map(|b| b.design));
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < domains[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, VariableMeta};

    /// Design `d` with three levels; bigger levels make `y = 1` rarer.
    fn design_circuit() -> Circuit {
        let mut b = CircuitBuilder::new(vec![
            VariableMeta::discrete(0, "d", 3),
            VariableMeta::discrete(1, "y", 2),
        ]);
        let d_low = b.categorical(0, &[0.7, 0.29, 0.01]);
        let y_bad = b.categorical(1, &[0.4, 0.6]);
        let d_high = b.categorical(0, &[0.1, 0.3, 0.6]);
        let y_good = b.categorical(1, &[0.97, 0.03]);
        let p1 = b.product(vec![d_low, y_bad]);
        let p2 = b.product(vec![d_high, y_good]);
        let root = b.sum(vec![p1, p2], &[0.5, 0.5]);
        b.build(root).unwrap()
    }

    fn program(eps: f64, mode: DenominatorMode) -> ChanceProgram {
        let c = design_circuit();
        let domain = BTreeMap::from([(0, vec![0, 1, 2])]);
        let target = Evidence::marginal(2).with_category(1, 1);
        let mut p =
            ChanceProgram::build(&c, &domain, &target, &Evidence::marginal(2), eps, mode).unwrap();
        p.set_costs(&BTreeMap::from([(0, vec![0.0, 1.0, 2.0])]))
            .unwrap();
        p
    }

    #[test]
    fn matches_enumeration_and_is_feasible() {
        for mode in [
            DenominatorMode::Circuit,
            DenominatorMode::UniformPrior { cells: 3 },
        ] {
            for eps in [0.02, 0.05, 0.2, 0.5, 1.0] {
                let p = program(eps, mode);
                let sol = solve(&p, &SolveLimits::default()).unwrap();
                assert_eq!(
                    sol.design,
                    solve_by_enumeration(&p).unwrap(),
                    "eps {eps} {mode:?}"
                );
                if sol.status == SolveStatus::Optimal {
                    p.model
                        .check_feasible(&sol.assignment, FEASIBILITY_TOLERANCE)
                        .unwrap();
                }
            }
        }
    }

    #[test]
    fn circuit_denominator_design_choice() {
        // max-product ratios: d=1 → 0.087/0.15, d=2 → 0.009/0.3
        let p = program(0.05, DenominatorMode::Circuit);
        let sol = solve(&p, &SolveLimits::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.design, Some(vec![2]));
        assert_eq!(sol.objective_value, Some(2.0));
    }

    #[test]
    fn infeasible_when_epsilon_is_tiny() {
        let sol = solve(
            &program(1e-6, DenominatorMode::Circuit),
            &SolveLimits::default(),
        )
        .unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.design.is_none() && sol.assignment.is_empty());
    }

    #[test]
    fn bad_epsilon_is_rejected() {
        let c = design_circuit();
        let domain = BTreeMap::from([(0, vec![0, 1, 2])]);
        let t = Evidence::marginal(2).with_category(1, 1);
        for eps in [0.0, -0.1, 1.5, f64::NAN] {
            let r = ChanceProgram::build(
                &c,
                &domain,
                &t,
                &Evidence::marginal(2),
                eps,
                DenominatorMode::Circuit,
            );
            assert!(matches!(r, Err(Error::InvalidEpsilon(_))));
        }
    }

    #[test]
    fn node_limit_reports_bound_limit() {
        let p = program(0.05, DenominatorMode::Circuit);
        let sol = solve(
            &p,
            &SolveLimits {
                max_nodes: 1,
                time_budget: None,
            },
        )
        .unwrap();
        assert_eq!(sol.status, SolveStatus::BoundLimit);
    }

    #[test]
    fn objective_outside_indicators_is_rejected() {
        let mut p = program(0.5, DenominatorMode::Circuit);
        let o = p.numerator.root_output();
        p.model
            .set_objective(ObjectiveSense::Minimize, vec![(o, 1.0)])
            .unwrap();
        assert!(matches!(
            solve(&p, &SolveLimits::default()),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn single_design_needs_one_node() {
        let c = design_circuit();
        let domain = BTreeMap::from([(0, vec![2])]);
        let t = Evidence::marginal(2).with_category(1, 1);
        let p = ChanceProgram::build(
            &c,
            &domain,
            &t,
            &Evidence::marginal(2),
            0.5,
            DenominatorMode::Circuit,
        )
        .unwrap();
        let sol = solve(&p, &SolveLimits::default()).unwrap();
        assert_eq!(
            (sol.status, sol.node_count, sol.design),
            (SolveStatus::Optimal, 1, Some(vec![2]))
        );
    }

    #[test]
    fn f32_agrees_with_f64() {
        let c32: Circuit<f32> = design_circuit().cast();
        let domain = BTreeMap::from([(0, vec![0, 1, 2])]);
        let t = Evidence::marginal(2).with_category(1, 1);
        let mut p = ChanceProgram::build(
            &c32,
            &domain,
            &t,
            &Evidence::marginal(2),
            0.05,
            DenominatorMode::Circuit,
        )
        .unwrap();
        p.set_costs(&BTreeMap::from([(0, vec![0.0, 1.0, 2.0])]))
            .unwrap();
        assert_eq!(
            solve(&p, &SolveLimits::default()).unwrap().design,
            Some(vec![2])
        );
    }
}
