use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use spnplan_core::circuit::{Circuit, CircuitBuilder, Evidence, VariableMeta};
use spnplan_core::milp::{
    encode_chance_constraint, encode_circuit, encode_into, export_lp, solve, solve_by_enumeration,
    uniform_prior_denominator, ChanceProgram, DenominatorMode, MilpModel, Orientation, Sense,
    SolveLimits, SolveStatus, VarType,
};
use spnplan_testkit::checks::milp_fidelity_suite;
use spnplan_testkit::lp::optimize;

#[test]
fn encoding_fidelity_and_solver_agreement() {
    match milp_fidelity_suite(31) {
        Ok(line) => println!("{line}"),
        Err(e) => panic!("{e}"),
    }
}

fn mixture() -> Circuit {
    let mut b = CircuitBuilder::new(vec![VariableMeta::discrete(0, "x", 2)]);
    let a = b.categorical(0, &[0.8, 0.2]);
    let c = b.categorical(0, &[0.2, 0.8]);
    let root = b.sum(vec![a, c], &[0.5, 0.5]);
    b.build(root).unwrap()
}

fn binaries(m: &MilpModel) -> usize {
    m.variables
        .iter()
        .filter(|v| v.kind == VarType::Binary)
        .count()
}

#[test]
fn mixture_encoding_layout() {
    let (model, ind, enc) =
        encode_circuit(&mixture(), &BTreeSet::from([0]), &Evidence::marginal(1)).unwrap();
    assert_eq!(ind.len(), 2);
    let selectors = &enc.selectors[&enc.root];
    assert_eq!(selectors.len(), 2);
    assert_eq!(binaries(&model), 4);
    let eq: Vec<_> = model
        .constraints
        .iter()
        .filter(|c| c.sense == Sense::Eq && c.terms.iter().all(|(v, _)| selectors.contains(v)))
        .collect();
    assert_eq!(eq.len(), 1);
    assert_eq!(eq[0].rhs, 1.0);
}

#[test]
fn mixture_lp_matches_golden_file() {
    let (model, _, _) =
        encode_circuit(&mixture(), &BTreeSet::from([0]), &Evidence::marginal(1)).unwrap();
    let text = export_lp(&model);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/mixture.lp");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &text).unwrap();
    }
    assert_eq!(text, std::fs::read_to_string(&golden).unwrap());
}

#[test]
fn sum_free_circuit_has_no_selectors() {
    let mut b = CircuitBuilder::new(vec![
        VariableMeta::discrete(0, "a", 2),
        VariableMeta::discrete(1, "b", 3),
    ]);
    let l = b.categorical(0, &[0.3, 0.7]);
    let r = b.categorical(1, &[0.2, 0.3, 0.5]);
    let root = b.product(vec![l, r]);
    let c = b.build(root).unwrap();
    let (model, ind, enc) =
        encode_circuit(&c, &BTreeSet::from([0, 1]), &Evidence::marginal(2)).unwrap();
    assert!(enc.selectors.is_empty());
    assert_eq!(binaries(&model), ind.len());
    // Root output is pinned by equalities, so each design gives one value.
    for (a, bb) in [(0, 0), (1, 2)] {
        let pins: Vec<(usize, f64)> = [(0, a), (1, bb)]
            .iter()
            .flat_map(|&(j, cat)| {
                ind.vars[&j]
                    .iter()
                    .map(move |&(k, id)| (id, if k == cat { 1.0 } else { 0.0 }))
            })
            .collect();
        let hi = optimize(&model, enc.root_output(), true, &pins).unwrap();
        let lo = optimize(&model, enc.root_output(), false, &pins).unwrap();
        let want = c
            .evaluate_exact(
                &Evidence::marginal(2)
                    .with_category(0, a)
                    .with_category(1, bb),
            )
            .unwrap();
        assert!((hi - want).abs() < 1e-9 && (lo - want).abs() < 1e-9);
    }
}

#[test]
fn fixed_design_optimum_is_the_max_product_value() {
    let c = mixture();
    for x in 0..2 {
        let ev = Evidence::marginal(1).with_category(0, x);
        let (model, ind, enc) = encode_circuit(&c, &BTreeSet::new(), &ev).unwrap();
        assert!(ind.is_empty());
        let got = optimize(&model, enc.root_output(), true, &[]).unwrap();
        let want = c.evaluate_max(&ev).unwrap().log_value;
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        assert!((got - 0.4f64.ln()).abs() < 1e-6);
    }
}

/// Two designs of `d` whose conditional shortfall is `p[d]`, each design
/// almost surely in its own mixture component.
fn two_design(p: [f64; 2]) -> Circuit {
    let mut b = CircuitBuilder::new(vec![
        VariableMeta::discrete(0, "d", 2),
        VariableMeta::discrete(1, "y", 2),
    ]);
    let kids = (0..2)
        .map(|k| {
            let mut dp = [1e-9; 2];
            dp[k] = 1.0 - 1e-9;
            let d = b.categorical(0, &dp);
            let y = b.categorical(1, &[1.0 - p[k], p[k]]);
            b.product(vec![d, y])
        })
        .collect();
    let root = b.sum(kids, &[0.5, 0.5]);
    b.build(root).unwrap()
}

fn program(c: &Circuit, epsilon: f64, mode: DenominatorMode, costs: Vec<f64>) -> ChanceProgram {
    let n = c.variables().len();
    let y = n - 1;
    let domain = BTreeMap::from([(0, (0..c.variables()[0].cardinality().unwrap()).collect())]);
    let target = Evidence::marginal(n).with_category(y, 1);
    let mut p =
        ChanceProgram::build(c, &domain, &target, &Evidence::marginal(n), epsilon, mode).unwrap();
    p.set_costs(&BTreeMap::from([(0, costs)])).unwrap();
    p
}

#[test]
fn chance_constraint_right_hand_sides() {
    let c = two_design([0.10, 0.01]);
    let rhs = |eps: f64| {
        let p = program(&c, eps, DenominatorMode::Circuit, vec![1.0, 2.0]);
        p.model
            .constraints
            .iter()
            .find(|k| k.name == "chance")
            .unwrap()
            .rhs
    };
    assert!((rhs(0.05) - 0.05f64.ln()).abs() < 1e-15);
    assert_eq!(rhs(1.0), 0.0);
}

#[test]
fn only_the_low_shortfall_design_is_feasible() {
    let c = two_design([0.10, 0.01]);
    let y1 = Evidence::marginal(2).with_category(1, 1);
    let exact: Vec<f64> = (0..2)
        .map(|d| {
            c.conditional_probability(&y1, &Evidence::marginal(2).with_category(0, d))
                .unwrap()
        })
        .collect();
    assert!((exact[0] - 0.10).abs() < 1e-6 && (exact[1] - 0.01).abs() < 1e-6);
    let p = program(&c, 0.05, DenominatorMode::Circuit, vec![1.0, 2.0]);
    assert!(!p.is_feasible(&[0]).unwrap());
    assert!(p.is_feasible(&[1]).unwrap());
    let sol = solve(&p, &SolveLimits::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert_eq!(sol.design, Some(vec![1]));
    assert_eq!(solve_by_enumeration(&p).unwrap(), Some(vec![1]));
}

#[test]
fn vacuous_allowance_takes_the_cheapest_design() {
    let c = two_design([0.10, 0.01]);
    let sol = solve(
        &program(&c, 1.0, DenominatorMode::Circuit, vec![1.0, 2.0]),
        &SolveLimits::default(),
    )
    .unwrap();
    assert_eq!(sol.design, Some(vec![0]));
}

#[test]
fn tiny_allowance_is_infeasible() {
    let c = two_design([0.10, 0.01]);
    let sol = solve(
        &program(&c, 0.005, DenominatorMode::Circuit, vec![1.0, 2.0]),
        &SolveLimits::default(),
    )
    .unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert_eq!(sol.design, None);
}

#[test]
fn uniform_prior_constants() {
    let c = mixture();
    for (cells, want) in [(121, 0.05f64.ln() - 121f64.ln()), (1, 0.05f64.ln())] {
        let mut model = MilpModel::new();
        let ind = spnplan_core::milp::add_design_indicators(
            &mut model,
            &c,
            &BTreeMap::from([(0, vec![0, 1])]),
        )
        .unwrap();
        let enc = encode_into(
            &mut model,
            &c,
            &ind,
            &Evidence::marginal(1),
            Orientation::Exact,
            "num",
        )
        .unwrap();
        let row = uniform_prior_denominator(&mut model, &enc, cells, 0.05).unwrap();
        assert!((model.constraints[row].rhs - want).abs() < 1e-12);
    }
}

/// `K` designs with flat prior mass; shortfall rises with the design index.
fn flat_prior(k: usize) -> Circuit {
    let mut b = CircuitBuilder::new(vec![
        VariableMeta::discrete(0, "d", k),
        VariableMeta::discrete(1, "y", 2),
    ]);
    let kids = (0..k)
        .map(|i| {
            let mut dp = vec![1e-6; k];
            dp[i] = 1.0 - 1e-6 * (k - 1) as f64;
            let d = b.categorical(0, &dp);
            let p = 0.3 / (1.0 + 2.0 * i as f64);
            let y = b.categorical(1, &[1.0 - p, p]);
            b.product(vec![d, y])
        })
        .collect();
    let root = b.sum(kids, &vec![1.0 / k as f64; k]);
    b.build(root).unwrap()
}

#[test]
fn denominator_modes_agree_on_a_flat_prior() {
    let c = flat_prior(5);
    let n = c.variables().len();
    for d in 0..5 {
        let px = c
            .evaluate_exact(&Evidence::marginal(n).with_category(0, d))
            .unwrap()
            .exp();
        assert!((px - 0.2).abs() < 1e-3);
    }
    for eps in [0.2, 0.08, 0.05, 0.04] {
        let costs: Vec<f64> = (0..5).map(|i| 1.0 + i as f64).collect();
        let a = solve(
            &program(&c, eps, DenominatorMode::Circuit, costs.clone()),
            &SolveLimits::default(),
        )
        .unwrap();
        let b = solve(
            &program(&c, eps, DenominatorMode::UniformPrior { cells: 5 }, costs),
            &SolveLimits::default(),
        )
        .unwrap();
        assert_eq!(a.design, b.design, "ε = {eps}");
        assert!(a.design.is_some());
    }
}

#[test]
fn exact_orientation_pins_every_output() {
    // Any feasible point of the exact encoding carries the max-product
    // value, so maximizing and minimizing the root agree.
    let c = two_design([0.3, 0.02]);
    let mut model = MilpModel::new();
    let ind = spnplan_core::milp::add_design_indicators(
        &mut model,
        &c,
        &BTreeMap::from([(0, vec![0, 1])]),
    )
    .unwrap();
    let num = encode_into(
        &mut model,
        &c,
        &ind,
        &Evidence::marginal(2).with_category(1, 1),
        Orientation::Exact,
        "num",
    )
    .unwrap();
    let den = encode_into(
        &mut model,
        &c,
        &ind,
        &Evidence::marginal(2),
        Orientation::Exact,
        "den",
    )
    .unwrap();
    encode_chance_constraint(&mut model, &num, &den, 1.0).unwrap();
    for d in 0..2 {
        let pins: Vec<(usize, f64)> = ind.vars[&0]
            .iter()
            .map(|&(k, id)| (id, if k == d { 1.0 } else { 0.0 }))
            .collect();
        let hi = optimize(&model, num.root_output(), true, &pins).unwrap();
        let lo = optimize(&model, num.root_output(), false, &pins).unwrap();
        let want = c
            .evaluate_max(
                &Evidence::marginal(2)
                    .with_category(0, d)
                    .with_category(1, 1),
            )
            .unwrap()
            .log_value;
        assert!(
            (hi - want).abs() < 1e-6 && (lo - want).abs() < 1e-6,
            "design {d}: [{lo}, {hi}] vs {want}"
        );
    }
}
