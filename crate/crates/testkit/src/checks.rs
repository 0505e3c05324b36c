//! Library-level acceptance suites. Each returns a one-line summary on
//! success and the first counterexample on failure.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spnplan_core::circuit::{Circuit, Evidence, LeafForm, Node, Value, VarKind, VariableMeta};
use spnplan_core::milp::{
    encode_circuit, solve, ChanceProgram, DenominatorMode, SolveLimits, SolveStatus,
    FEASIBILITY_TOLERANCE,
};
use spnplan_core::sim::{
    outcome, sample_environment, shortfall_label, simulate_trace, DesignGrid, EnvParams, SimParams,
};

use crate::naive::{assignments, max_prob, prob};
use crate::plan::{candidates, cheapest};
use crate::random::{random_circuit, random_circuit_over, random_simplex, Shape};

pub type Outcome = Result<String, String>;

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    if t > limit {
        Err(format!("{what} took {t:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

/// A value drawn uniformly from the variable's domain.
pub fn random_value<R: Rng>(rng: &mut R, meta: &VariableMeta) -> Value {
    match meta.kind {
        VarKind::Discrete { cardinality } => Value::Category(rng.random_range(0..cardinality)),
        VarKind::Continuous { lower, upper } => Value::Real(rng.random_range(lower..=upper)),
    }
}

/// Random partial evidence; each variable assigned with probability `p`.
pub fn random_evidence<R: Rng>(rng: &mut R, c: &Circuit, p: f64) -> Evidence {
    let mut ev = Evidence::marginal(c.variables().len());
    for meta in c.variables() {
        if rng.random_bool(p) {
            ev.set(meta.id, Some(random_value(rng, meta)));
        }
    }
    ev
}

/// Total mass of the marginal of `var`: a sum over categories, or a
/// midpoint integral over the union of all histogram edges (exact for
/// piecewise-constant densities).
pub fn marginal_mass(c: &Circuit, var: usize) -> f64 {
    let n = c.variables().len();
    let meta = &c.variables()[var];
    match meta.kind {
        VarKind::Discrete { cardinality } => (0..cardinality)
            .map(|k| {
                c.evaluate_exact(&Evidence::marginal(n).with_category(var, k))
                    .unwrap()
                    .exp()
            })
            .sum(),
        VarKind::Continuous { .. } => {
            let mut edges: Vec<f64> = c
                .nodes()
                .iter()
                .filter_map(|node| match node {
                    Node::Leaf(l) if l.variable == var => match &l.form {
                        LeafForm::Histogram { bin_edges, .. } => Some(bin_edges.clone()),
                        _ => None,
                    },
                    _ => None,
                })
                .flatten()
                .collect();
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            edges
                .windows(2)
                .map(|w| {
                    let mid = 0.5 * (w[0] + w[1]);
                    let ev = Evidence::marginal(n).with(var, Value::Real(mid));
                    (w[1] - w[0]) * c.evaluate_exact(&ev).unwrap().exp()
                })
                .sum()
        }
    }
}

/// 200 random mixed-leaf circuits (≤ 60 nodes): the all-marginal query is
/// log 1 and every single-variable marginal has unit mass, within 1e-9.
pub fn normalization_suite(seed: u64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = 0;
    for i in 0..200 {
        let shape = Shape {
            n_vars: rng.random_range(1..=6),
            max_card: 4,
            p_continuous: 0.35,
            max_nodes: 60,
        };
        let c = random_circuit(&mut rng, &shape);
        if c.len() > 60 {
            return Err(format!("circuit {i} has {} nodes", c.len()));
        }
        let n = c.variables().len();
        let all = c
            .evaluate_exact(&Evidence::marginal(n))
            .map_err(|e| e.to_string())?;
        if all.abs() > 1e-9 {
            return Err(format!("circuit {i}: all-marginal log value {all}"));
        }
        let naive = prob(&c, &Evidence::marginal(n));
        if (naive - 1.0).abs() > 1e-9 {
            return Err(format!("circuit {i}: naive all-marginal value {naive}"));
        }
        for v in 0..n {
            let m = marginal_mass(&c, v);
            queries += 1;
            if (m - 1.0).abs() > 1e-9 {
                return Err(format!(
                    "circuit {i}: marginal of variable {v} has mass {m}"
                ));
            }
        }
    }
    within(start, Duration::from_secs(10), "normalization suite")?;
    Ok(format!(
        "200 circuits, {queries} marginals, {:.2?}",
        start.elapsed()
    ))
}

/// 100 random circuits over ≤ 12 binary variables: marginals and
/// conditionals match full-joint enumeration within 1e-9.
pub fn brute_force_suite(seed: u64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for i in 0..100 {
        let shape = Shape {
            n_vars: rng.random_range(2..=12),
            max_card: 2,
            p_continuous: 0.0,
            max_nodes: 60,
        };
        let c = random_circuit(&mut rng, &shape);
        let n = c.variables().len();
        // Full joint by naive evaluation of every complete assignment.
        let table: Vec<(Vec<usize>, f64)> = assignments(&vec![2; n])
            .into_iter()
            .map(|a| {
                let ev = Evidence::full(a.iter().map(|&k| Value::Category(k)).collect());
                let p = prob(&c, &ev);
                (a, p)
            })
            .collect();
        let total: f64 = table.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(format!("circuit {i}: joint sums to {total}"));
        }
        let brute = |ev: &Evidence| -> f64 {
            table
                .iter()
                .filter(|(a, _)| {
                    (0..n).all(|v| ev.get(v).is_none_or(|x| *x == Value::Category(a[v])))
                })
                .map(|(_, p)| p)
                .sum()
        };
        for q in 0..30 {
            let ev = random_evidence(&mut rng, &c, 0.5);
            let got = c.evaluate_exact(&ev).map_err(|e| e.to_string())?.exp();
            let want = brute(&ev);
            if (got - want).abs() > 1e-9 {
                return Err(format!(
                    "circuit {i} query {q}: marginal {got} vs enumeration {want}"
                ));
            }
            // Conditional: split the evidence into target and given.
            let mut target = Evidence::marginal(n);
            let mut given = Evidence::marginal(n);
            for (v, x) in ev.assigned() {
                if rng.random_bool(0.5) {
                    target.set(v, Some(*x));
                } else {
                    given.set(v, Some(*x));
                }
            }
            let den = brute(&given);
            if den > 0.0 {
                let want = (brute(&ev) / den).min(1.0);
                let got = c
                    .conditional_probability(&target, &given)
                    .map_err(|e| e.to_string())?;
                if (got - want).abs() > 1e-9 {
                    return Err(format!(
                        "circuit {i} query {q}: conditional {got} vs enumeration {want}"
                    ));
                }
            }
            checked += 2;
        }
    }
    within(start, Duration::from_secs(30), "brute-force suite")?;
    Ok(format!(
        "100 circuits, {checked} queries, {:.2?}",
        start.elapsed()
    ))
}

/// 1,000 random (circuit, evidence) pairs: max ≤ exact ≤ max + Σ log|ch|.
pub fn max_bound_suite(seed: u64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..1000 {
        let shape = Shape {
            n_vars: rng.random_range(1..=6),
            max_card: 4,
            p_continuous: 0.3,
            max_nodes: 60,
        };
        let c = random_circuit(&mut rng, &shape);
        let p = rng.random_range(0.0..1.0);
        let ev = random_evidence(&mut rng, &c, p);
        let exact = c.evaluate_exact(&ev).map_err(|e| e.to_string())?;
        let max = c.evaluate_max(&ev).map_err(|e| e.to_string())?.log_value;
        let gap: f64 = c
            .sum_nodes()
            .map(|s| (c.node(s).children().len() as f64).ln())
            .sum();
        if !(max <= exact + 1e-9 && exact <= max + gap + 1e-9) {
            return Err(format!(
                "pair {i}: max {max}, exact {exact}, gap bound {gap}"
            ));
        }
        let naive = max_prob(&c, &ev).ln();
        if (naive - max).abs() > 1e-9 * max.abs().max(1.0) {
            return Err(format!("pair {i}: max-product {max} vs naive {naive}"));
        }
    }
    within(start, Duration::from_secs(10), "max-bound suite")?;
    Ok(format!("1000 pairs, {:.2?}", start.elapsed()))
}

/// A circuit over 1–3 discrete design variables (grid ≤ 200 cells), a
/// binary label and sometimes a continuous nuisance variable.
fn design_circuit<R: Rng>(rng: &mut R) -> (Circuit, BTreeMap<usize, Vec<usize>>, usize) {
    let (k, cards) = loop {
        let k = rng.random_range(1..=3);
        let cards: Vec<usize> = (0..k).map(|_| rng.random_range(2..=6)).collect();
        if cards.iter().product::<usize>() <= 200 {
            break (k, cards);
        }
    };
    let mut vars: Vec<VariableMeta> = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| VariableMeta::discrete(i, format!("d{i}"), c))
        .collect();
    vars.push(VariableMeta::discrete(k, "y", 2));
    if rng.random_bool(0.5) {
        vars.push(VariableMeta::continuous(k + 1, "z", 0.0, 1.0));
    }
    let c = random_circuit_over(rng, vars, 50);
    let domain = (0..k).map(|j| (j, (0..cards[j]).collect())).collect();
    (c, domain, k)
}

/// Encoding fidelity and solver correctness on 100 random design circuits.
///
/// For every design of every circuit an external MILP solver maximizes the
/// encoded root output; it must equal `evaluate_max` within 1e-6 and never
/// exceed `evaluate_exact`. The branch-and-bound solution of a random
/// chance program must equal exhaustive enumeration.
pub fn milp_fidelity_suite(seed: u64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut designs = 0;
    let mut feasible = 0;
    for i in 0..100 {
        let (c, domain, k) = design_circuit(&mut rng);
        let n = c.variables().len();
        let free = domain.keys().copied().collect();
        let base = if rng.random_bool(0.5) {
            Evidence::marginal(n).with_category(k, 1)
        } else {
            Evidence::marginal(n)
        };
        let (model, ind, enc) = encode_circuit(&c, &free, &base).map_err(|e| e.to_string())?;
        let sizes: Vec<usize> = domain.values().map(Vec::len).collect();
        for a in assignments(&sizes) {
            let mut pins = Vec::new();
            let mut ev = base.clone();
            for (j, &cat) in a.iter().enumerate() {
                for (kk, id) in &ind.vars[&j] {
                    pins.push((*id, if *kk == cat { 1.0 } else { 0.0 }));
                }
                ev.set(j, Some(Value::Category(cat)));
            }
            let want = c.evaluate_max(&ev).map_err(|e| e.to_string())?.log_value;
            let exact = c.evaluate_exact(&ev).map_err(|e| e.to_string())?;
            let got =
                crate::lp::optimize(&model, enc.root_output(), true, &pins).ok_or_else(|| {
                    format!("circuit {i} design {a:?}: external solver found no optimum")
                })?;
            if (got - want).abs() > 1e-6 {
                return Err(format!(
                    "circuit {i} design {a:?}: encoded optimum {got} vs max-product {want}"
                ));
            }
            if got > exact + 1e-6 {
                return Err(format!(
                    "circuit {i} design {a:?}: encoded optimum {got} above exact {exact}"
                ));
            }
            designs += 1;
        }

        // Chance program with random costs and an ε kept away from every
        // design's ratio so feasibility is unambiguous.
        let costs: BTreeMap<usize, Vec<f64>> = domain
            .iter()
            .map(|(&j, cats)| (j, cats.iter().map(|_| rng.random_range(0.0..5.0)).collect()))
            .collect();
        let target = Evidence::marginal(n).with_category(k, 1);
        let cells: usize = sizes.iter().product();
        let mode = if rng.random_bool(0.7) {
            DenominatorMode::Circuit
        } else {
            DenominatorMode::UniformPrior { cells }
        };
        let den = match mode {
            DenominatorMode::Circuit => None,
            DenominatorMode::UniformPrior { cells } => Some(-(cells as f64).ln()),
        };
        let cands = candidates(&c, &domain, &target, &costs, den);
        let mut ratios: Vec<f64> = cands
            .iter()
            .map(|c| c.log_ratio)
            .filter(|r| *r < 0.0)
            .collect();
        ratios.push(0.0);
        ratios.sort_by(f64::total_cmp);
        let log_eps = loop {
            let pick = rng.random_range(ratios[0] - 1.0..=0.0);
            if ratios.iter().all(|r| (r - pick).abs() > 1e-4) {
                break pick;
            }
        };
        let mut program = ChanceProgram::build(
            &c,
            &domain,
            &target,
            &Evidence::marginal(n),
            log_eps.exp(),
            mode,
        )
        .map_err(|e| e.to_string())?;
        program.set_costs(&costs).map_err(|e| e.to_string())?;
        let sol = solve(&program, &SolveLimits::default()).map_err(|e| e.to_string())?;
        let want = cheapest(&cands, log_eps);
        if sol.design != want {
            return Err(format!(
                "circuit {i}: solver chose {:?}, enumeration {want:?}",
                sol.design
            ));
        }
        match sol.status {
            SolveStatus::Optimal => {
                feasible += 1;
                program
                    .model
                    .check_feasible(&sol.assignment, FEASIBILITY_TOLERANCE)
                    .map_err(|e| format!("circuit {i}: {e}"))?;
                check_selectors(&program, &sol.assignment)
                    .map_err(|e| format!("circuit {i}: {e}"))?;
            }
            SolveStatus::Infeasible => {}
            SolveStatus::BoundLimit => {
                return Err(format!("circuit {i}: solver hit its node limit"))
            }
        }
    }
    within(start, Duration::from_secs(120), "MILP fidelity suite")?;
    Ok(format!(
        "100 circuits, {designs} encoded designs, {feasible} feasible programs, {:.2?}",
        start.elapsed()
    ))
}

/// Selector sums are exact and inactive big-M slacks stay within `T`.
fn check_selectors(p: &ChanceProgram, x: &[f64]) -> Result<(), String> {
    let mut encs = vec![&p.numerator];
    if let spnplan_core::milp::Denominator::Circuit(d) = &p.denominator {
        encs.push(d);
    }
    for enc in encs {
        for (&node, ms) in &enc.selectors {
            let on: f64 = ms.iter().map(|&m| x[m]).sum();
            if on != (ms.len() - 1) as f64 {
                return Err(format!("selectors of node {node} sum to {on}"));
            }
            let Node::Sum {
                children,
                log_weights,
            } = p.circuit.node(node)
            else {
                unreachable!()
            };
            let t = enc.big_m[&node];
            for ((&ch, &w), &m) in children.iter().zip(log_weights).zip(ms) {
                let slack = x[enc.node_outputs[ch]] + w - x[enc.node_outputs[node]];
                if x[m] == 1.0 && -slack > t + 1e-9 {
                    return Err(format!(
                        "node {node}: inactive child gap {} exceeds T = {t}",
                        -slack
                    ));
                }
            }
        }
    }
    Ok(())
}

/// 10,000 random (design, scenario) pairs: per-step power balance and the
/// storage ledger close within 1e-9, state of charge stays in bounds, the
/// label follows the tolerance rule, and adding a unit never hurts.
pub fn simulator_ledger_suite(seed: u64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = DesignGrid::default();
    let env = EnvParams::default();
    let mut shortfalls = 0;
    for i in 0..10_000 {
        let sim = SimParams {
            tolerance_mw: if rng.random_bool(0.3) {
                rng.random_range(0.0..0.3)
            } else {
                0.0
            },
            initial_soc_fraction: rng.random_range(0.0..=1.0),
            ..SimParams::default()
        };
        let (pv, bat) = (
            rng.random_range(0..grid.pv_levels()),
            rng.random_range(0..grid.battery_levels()),
        );
        let design = grid.design(pv, bat);
        let scenario = sample_environment(&mut rng, &env);
        let tr = simulate_trace(&design, &scenario, &sim);
        let cap = design.battery_capacity_mwh();
        let power = design.battery_power_mw();
        let (eta_c, eta_d) = (sim.charge_efficiency, sim.discharge_efficiency);
        for t in 0..tr.load.len() {
            let balance =
                tr.pv[t] - tr.charge[t] - tr.curtailed[t] + tr.discharge[t] + tr.deficit[t]
                    - tr.load[t];
            if balance.abs() > 1e-9 {
                return Err(format!("pair {i} step {t}: power balance off by {balance}"));
            }
            let storage =
                tr.soc[t + 1] - tr.soc[t] - eta_c * tr.charge[t] + tr.discharge[t] / eta_d;
            if storage.abs() > 1e-9 {
                return Err(format!(
                    "pair {i} step {t}: storage ledger off by {storage}"
                ));
            }
            let flows = [
                tr.charge[t],
                tr.discharge[t],
                tr.curtailed[t],
                tr.deficit[t],
            ];
            if flows.iter().any(|&f| f < -1e-12)
                || tr.charge[t] > power + 1e-9
                || tr.discharge[t] > power + 1e-9
            {
                return Err(format!("pair {i} step {t}: flow out of bounds {flows:?}"));
            }
        }
        if tr.soc.iter().any(|&s| s < -1e-9 || s > cap + 1e-9) {
            return Err(format!("pair {i}: state of charge outside [0, {cap}]"));
        }
        let out = outcome(&tr, &sim);
        let peak = tr.deficit.iter().copied().fold(0.0, f64::max);
        if out.shortfall != (peak > sim.tolerance_mw) || out.max_deficit != peak {
            return Err(format!(
                "pair {i}: label {} with peak deficit {peak}",
                out.shortfall
            ));
        }
        if out.shortfall != shortfall_label(&design, &scenario, &sim) {
            return Err(format!(
                "pair {i}: dispatch and feasibility labels disagree"
            ));
        }
        shortfalls += out.shortfall as usize;
        for (dp, db) in [(1, 0), (0, 1)] {
            if grid.contains(pv + dp, bat + db) {
                let bigger = outcome(
                    &simulate_trace(&grid.design(pv + dp, bat + db), &scenario, &sim),
                    &sim,
                );
                if bigger.max_deficit > out.max_deficit + 1e-9
                    || (bigger.shortfall && !out.shortfall)
                {
                    return Err(format!(
                        "pair {i}: adding ({dp}, {db}) to ({pv}, {bat}) raised the peak deficit {} -> {}",
                        out.max_deficit, bigger.max_deficit
                    ));
                }
            }
        }
    }
    within(start, Duration::from_secs(60), "simulator ledger suite")?;
    Ok(format!(
        "10000 pairs, {shortfalls} shortfalls, {:.2?}",
        start.elapsed()
    ))
}

/// Random normalized weights, re-exported for callers building toy circuits.
pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    random_simplex(rng, n)
}
