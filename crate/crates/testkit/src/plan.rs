//! Exhaustive chance-constrained planning, the reference for the solver.

use std::collections::BTreeMap;

use spnplan_core::circuit::{Circuit, Evidence, Value};

use crate::naive::{assignments, max_prob};

/// One design per free variable (ascending ids), with its max-product log-ratio.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub design: Vec<usize>,
    pub cost: f64,
    pub log_ratio: f64,
}

/// Every design in `domain` with its cost and max-product
/// `log num − log den`; `den_log = None` uses the circuit denominator.
pub fn candidates(
    c: &Circuit,
    domain: &BTreeMap<usize, Vec<usize>>,
    target: &Evidence,
    costs: &BTreeMap<usize, Vec<f64>>,
    den_log: Option<f64>,
) -> Vec<Candidate> {
    let vars: Vec<usize> = domain.keys().copied().collect();
    let sizes: Vec<usize> = domain.values().map(Vec::len).collect();
    assignments(&sizes)
        .into_iter()
        .map(|idx| {
            let design: Vec<usize> = idx
                .iter()
                .zip(domain.values())
                .map(|(&i, cats)| cats[i])
                .collect();
            let mut given = Evidence::marginal(c.variables().len());
            for (&v, &k) in vars.iter().zip(&design) {
                given.set(v, Some(Value::Category(k)));
            }
            let joint = target.union(&given).unwrap();
            let num = max_prob(c, &joint).ln();
            let den = den_log.unwrap_or_else(|| max_prob(c, &given).ln());
            let cost = vars.iter().zip(&design).map(|(v, &k)| costs[v][k]).sum();
            Candidate {
                design,
                cost,
                log_ratio: num - den,
            }
        })
        .collect()
}

/// Cheapest candidate with `log_ratio ≤ log ε`; near-equal costs prefer
/// fewer units, then the smaller design vector.
pub fn cheapest(cands: &[Candidate], log_eps: f64) -> Option<Vec<usize>> {
    let mut best: Option<&Candidate> = None;
    for c in cands.iter().filter(|c| c.log_ratio <= log_eps) {
        let better = match best {
            None => true,
            Some(b) if (c.cost - b.cost).abs() > 1e-9 => c.cost < b.cost,
            Some(b) => {
                let (cu, bu): (usize, usize) = (c.design.iter().sum(), b.design.iter().sum());
                (cu, &c.design) < (bu, &b.design)
            }
        };
        if better {
            best = Some(c);
        }
    }
    best.map(|c| c.design.clone())
}
