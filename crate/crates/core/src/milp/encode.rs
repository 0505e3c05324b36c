use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::model::{MilpModel, Sense, VarId};
use crate::circuit::{Circuit, Evidence, Interval, LeafForm, Node, NodeId, VarKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One-hot indicators `d_{j,k}` for the free design variables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignIndicators {
    /// Circuit variable → (category, indicator) pairs, categories ascending.
    pub vars: BTreeMap<usize, Vec<(usize, VarId)>>,
}

impl DesignIndicators {
    pub fn free_vars(&self) -> BTreeSet<usize> {
        self.vars.keys().copied().collect()
    }

    /// Allowed categories per free variable.
    pub fn domain(&self) -> BTreeMap<usize, Vec<usize>> {
        self.vars
            .iter()
            .map(|(&j, ks)| (j, ks.iter().map(|&(k, _)| k).collect()))
            .collect()
    }

    pub fn indicator(&self, var: usize, category: usize) -> Option<VarId> {
        self.vars
            .get(&var)?
            .iter()
            .find(|&&(k, _)| k == category)
            .map(|&(_, id)| id)
    }

    pub fn len(&self) -> usize {
        self.vars.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

/// Adds `d_{j,k}` binaries and `Σ_k d_{j,k} = 1` for each free variable.
///
/// `domain` lists the allowed categories of each free design variable.
pub fn add_design_indicators<F: Scalar>(
    model: &mut MilpModel<F>,
    circuit: &Circuit<F>,
    domain: &BTreeMap<usize, Vec<usize>>,
) -> Result<DesignIndicators> {
    let mut vars = BTreeMap::new();
    for (&j, cats) in domain {
        let meta = circuit.variables().get(j).ok_or_else(|| {
            Error::InvalidModel(format!("design variable {j} is not in the circuit"))
        })?;
        let card = match meta.kind {
            VarKind::Discrete { cardinality } => cardinality,
            VarKind::Continuous { .. } => {
                return Err(Error::UnsupportedFreeVariable(meta.name.clone()))
            }
        };
        let mut cats = cats.clone();
        cats.sort_unstable();
        cats.dedup();
        if cats.is_empty() || cats.iter().any(|&k| k >= card) {
            return Err(Error::InvalidModel(format!(
                "design domain of `{}` must be a non-empty subset of 0..{card}",
                meta.name
            )));
        }
        let ids: Vec<(usize, VarId)> = cats
            .iter()
            .map(|&k| (k, model.add_binary(format!("d_{}_{k}", meta.name))))
            .collect();
        model.add_constraint(
            format!("onehot_{}", meta.name),
            ids.iter().map(|&(_, id)| (id, F::one())).collect(),
            Sense::Eq,
            F::one(),
        )?;
        vars.insert(j, ids);
    }
    Ok(DesignIndicators { vars })
}

/// Direction of the sum-node constraint system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Only `o_n ≤ o_a + log w_a + m_a·T`: `o_n` is bounded by the max and
    /// reaches it when pushed upward.
    UpperBound,
    /// Adds `o_n ≥ o_a + log w_a` for every child, pinning `o_n` to the
    /// max-product value in every feasible solution.
    Exact,
}

/// Variables and constants created for one circuit.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "F: Scalar")]
pub struct EncodedCircuit<F = f64> {
    pub tag: String,
    pub orientation: Orientation,
    /// `o_n` per circuit node.
    pub node_outputs: Vec<VarId>,
    /// Sum node → selector binary per child, in child order.
    pub selectors: BTreeMap<NodeId, Vec<VarId>>,
    /// Sum node → big-M constant.
    pub big_m: BTreeMap<NodeId, F>,
    pub bounds: Vec<Interval<F>>,
    #[serde(skip)]
    pub evidence: Evidence<F>,
    pub root: NodeId,
}

impl<F: Scalar> EncodedCircuit<F> {
    pub fn root_output(&self) -> VarId {
        self.node_outputs[self.root]
    }
}

/// Encodes the max-product evaluation of `circuit` into `model`.
///
/// Leaves over free design variables become linear in the indicators;
/// every other leaf is a constant taken from `evidence` (0 when the
/// variable is marginalized). Node outputs are bounded by their
/// interval-propagated ranges.
pub fn encode_into<F: Scalar>(
    model: &mut MilpModel<F>,
    circuit: &Circuit<F>,
    indicators: &DesignIndicators,
    evidence: &Evidence<F>,
    orientation: Orientation,
    tag: &str,
) -> Result<EncodedCircuit<F>> {
    if let Some(v) = circuit.report().violations.first() {
        return Err(Error::InvalidCircuit(
            circuit.report().violations.len(),
            v.to_string(),
        ));
    }
    if let Some(j) = indicators.vars.keys().find(|&&j| evidence.get(j).is_some()) {
        return Err(Error::InvalidEvidence(format!(
            "design variable {j} is both free and assigned"
        )));
    }
    let bounds = circuit.node_output_bounds_restricted(&indicators.domain(), evidence);

    let node_outputs: Vec<VarId> = (0..circuit.len())
        .map(|n| model.add_continuous(format!("o_{tag}_{n}"), bounds[n].lower, bounds[n].upper))
        .collect();
    let mut selectors = BTreeMap::new();
    let mut big_m = BTreeMap::new();

    for &n in circuit.evaluation_order() {
        let o = node_outputs[n];
        match circuit.node(n) {
            Node::Leaf(leaf) => match indicators.vars.get(&leaf.variable) {
                Some(ids) => {
                    let LeafForm::Categorical { log_probs } = &leaf.form else {
                        unreachable!("free variables are discrete")
                    };
                    let mut terms = vec![(o, F::one())];
                    terms.extend(ids.iter().map(|&(k, d)| (d, -log_probs[k])));
                    model.add_constraint(format!("leaf_{tag}_{n}"), terms, Sense::Eq, F::zero())?;
                }
                None => {
                    let c = leaf.log_value(evidence.get(leaf.variable));
                    model.add_constraint(
                        format!("leaf_{tag}_{n}"),
                        vec![(o, F::one())],
                        Sense::Eq,
                        c,
                    )?;
                }
            },
            Node::Product { children } => {
                let mut terms = vec![(o, F::one())];
                terms.extend(children.iter().map(|&c| (node_outputs[c], -F::one())));
                model.add_constraint(format!("prod_{tag}_{n}"), terms, Sense::Eq, F::zero())?;
            }
            Node::Sum {
                children,
                log_weights,
            } => {
                let (lo, hi) = children
                    .iter()
                    .zip(log_weights)
                    .fold((F::infinity(), F::neg_infinity()), |(lo, hi), (&c, &w)| {
                        (lo.min(bounds[c].lower + w), hi.max(bounds[c].upper + w))
                    });
                let t = hi - lo + F::one();
                big_m.insert(n, t);
                let ms: Vec<VarId> = (0..children.len())
                    .map(|a| model.add_binary(format!("m_{tag}_{n}_{a}")))
                    .collect();
                for (a, (&c, &w)) in children.iter().zip(log_weights).enumerate() {
                    model.add_constraint(
                        format!("max_{tag}_{n}_{a}"),
                        vec![(o, F::one()), (node_outputs[c], -F::one()), (ms[a], -t)],
                        Sense::Le,
                        w,
                    )?;
                    if orientation == Orientation::Exact {
                        model.add_constraint(
                            format!("dom_{tag}_{n}_{a}"),
                            vec![(o, F::one()), (node_outputs[c], -F::one())],
                            Sense::Ge,
                            w,
                        )?;
                    }
                }
                model.add_constraint(
                    format!("sel_{tag}_{n}"),
                    ms.iter().map(|&m| (m, F::one())).collect(),
                    Sense::Eq,
                    F::of((children.len() - 1) as f64),
                )?;
                selectors.insert(n, ms);
            }
        }
    }

    Ok(EncodedCircuit {
        tag: tag.to_string(),
        orientation,
        node_outputs,
        selectors,
        big_m,
        bounds,
        evidence: evidence.clone(),
        root: circuit.root(),
    })
}

/// Fresh model holding the indicators for `free_design_vars` (whole
/// domains) and the circuit encoding in [`Orientation::UpperBound`] form.
pub fn encode_circuit<F: Scalar>(
    circuit: &Circuit<F>,
    free_design_vars: &BTreeSet<usize>,
    evidence: &Evidence<F>,
) -> Result<(MilpModel<F>, DesignIndicators, EncodedCircuit<F>)> {
    let mut domain = BTreeMap::new();
    for &j in free_design_vars {
        let meta = circuit.variables().get(j).ok_or_else(|| {
            Error::InvalidModel(format!("design variable {j} is not in the circuit"))
        })?;
        let card = meta
            .cardinality()
            .ok_or_else(|| Error::UnsupportedFreeVariable(meta.name.clone()))?;
        domain.insert(j, (0..card).collect());
    }
    let mut model = MilpModel::new();
    let indicators = add_design_indicators(&mut model, circuit, &domain)?;
    let enc = encode_into(
        &mut model,
        circuit,
        &indicators,
        evidence,
        Orientation::UpperBound,
        "c",
    )?;
    Ok((model, indicators, enc))
}

/// Right-hand side `log ε` of the chance constraint.
pub fn log_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    Ok(epsilon.ln())
}

/// Adds `o_root(num) − o_root(den) ≤ log ε`.
pub fn encode_chance_constraint<F: Scalar>(
    model: &mut MilpModel<F>,
    numerator: &EncodedCircuit<F>,
    denominator: &EncodedCircuit<F>,
    epsilon: f64,
) -> Result<usize> {
    let rhs = log_epsilon(epsilon)?;
    model.add_constraint(
        "chance",
        vec![
            (numerator.root_output(), F::one()),
            (denominator.root_output(), -F::one()),
        ],
        Sense::Le,
        F::of(rhs),
    )
}

/// Adds `o_root(num) ≤ log ε − log cells`, the chance constraint under a
/// uniform design prior over `cells` designs.
pub fn uniform_prior_denominator<F: Scalar>(
    model: &mut MilpModel<F>,
    numerator: &EncodedCircuit<F>,
    cells: usize,
    epsilon: f64,
) -> Result<usize> {
    if cells == 0 {
        return Err(Error::InvalidParameter("design grid is empty".into()));
    }
    let rhs = log_epsilon(epsilon)? - (cells as f64).ln();
    model.add_constraint(
        "chance",
        vec![(numerator.root_output(), F::one())],
        Sense::Le,
        F::of(rhs),
    )
}
