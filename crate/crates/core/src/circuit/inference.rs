use std::collections::{BTreeMap, BTreeSet};

use super::{Circuit, Evidence, LeafForm, Node, NodeId};
use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};

/// Diagnostics from a bottom-up pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InferenceStats {
    pub node_visits: usize,
}

/// Result of a max-product pass.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxEvaluation<F = f64> {
    pub log_value: F,
    /// Max-product output of every node.
    pub node_values: Vec<F>,
    /// For each sum node, the position (within its child list) of the
    /// winning child; `None` for other nodes.
    pub active: Vec<Option<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Interval<F = f64> {
    pub lower: F,
    pub upper: F,
}

impl<F: Scalar> Interval<F> {
    pub fn point(v: F) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn width(&self) -> F {
        self.upper - self.lower
    }

    pub fn contains(&self, v: F, tol: F) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }
}

#[derive(Clone, Copy)]
enum SumRule {
    LogSumExp,
    Max,
}

impl<F: Scalar> Circuit<F> {
    fn ensure_valid(&self) -> Result<()> {
        match self.report.violations.first() {
            None => Ok(()),
            Some(first) => Err(Error::InvalidCircuit(
                self.report.violations.len(),
                first.to_string(),
            )),
        }
    }

    fn pass(
        &self,
        evidence: &Evidence<F>,
        rule: SumRule,
        mut active: Option<&mut Vec<Option<usize>>>,
    ) -> Result<(Vec<F>, usize)> {
        self.ensure_valid()?;
        evidence.check(&self.variables)?;
        let mut values = vec![F::neg_infinity(); self.nodes.len()];
        let mut visits = 0usize;
        for &id in &self.order {
            visits += 1;
            values[id] = match &self.nodes[id] {
                Node::Leaf(leaf) => leaf.log_value(evidence.get(leaf.variable)),
                Node::Product { children } => children.iter().map(|&c| values[c]).sum(),
                Node::Sum {
                    children,
                    log_weights,
                } => {
                    let terms = children
                        .iter()
                        .zip(log_weights)
                        .map(|(&c, &w)| values[c] + w);
                    match rule {
                        SumRule::LogSumExp => log_sum_exp(terms),
                        SumRule::Max => {
                            let mut best = F::neg_infinity();
                            let mut arg = 0;
                            for (i, t) in terms.enumerate() {
                                // strict: ties keep the lowest index
                                if t > best || i == 0 {
                                    best = t;
                                    arg = i;
                                }
                            }
                            if let Some(active) = active.as_deref_mut() {
                                active[id] = Some(arg);
                            }
                            best
                        }
                    }
                }
            };
        }
        Ok((values, visits))
    }

    /// Log-density with marginalized variables integrated out.
    pub fn evaluate_exact(&self, evidence: &Evidence<F>) -> Result<F> {
        Ok(self.evaluate_exact_with_stats(evidence)?.0)
    }

    pub fn evaluate_exact_with_stats(&self, evidence: &Evidence<F>) -> Result<(F, InferenceStats)> {
        let (values, visits) = self.pass(evidence, SumRule::LogSumExp, None)?;
        Ok((
            values[self.root],
            InferenceStats {
                node_visits: visits,
            },
        ))
    }

    /// Exact log-output of every node.
    pub fn node_log_values(&self, evidence: &Evidence<F>) -> Result<Vec<F>> {
        Ok(self.pass(evidence, SumRule::LogSumExp, None)?.0)
    }

    /// Max-product evaluation: each sum node keeps only its largest weighted
    /// child. Never exceeds [`Circuit::evaluate_exact`].
    pub fn evaluate_max(&self, evidence: &Evidence<F>) -> Result<MaxEvaluation<F>> {
        let mut active = vec![None; self.nodes.len()];
        let (values, _) = self.pass(evidence, SumRule::Max, Some(&mut active))?;
        Ok(MaxEvaluation {
            log_value: values[self.root],
            node_values: values,
            active,
        })
    }

    /// `P(target | given)` from two exact passes.
    pub fn conditional_probability(&self, target: &Evidence<F>, given: &Evidence<F>) -> Result<F> {
        let joint = target.union(given)?;
        let denominator = self.evaluate_exact(given)?;
        if denominator == F::neg_infinity() {
            return Err(Error::UndefinedConditional);
        }
        let numerator = self.evaluate_exact(&joint)?;
        Ok((numerator - denominator).exp().min(F::one()))
    }

    /// Sound per-node intervals on the max-product log-output, with
    /// `free_vars` ranging over their whole domain and every other variable
    /// taken from `fixed` (marginalized ones contribute 0).
    pub fn node_output_bounds(
        &self,
        free_vars: &BTreeSet<usize>,
        fixed: &Evidence<F>,
    ) -> Vec<Interval<F>> {
        self.bounds_with(fixed, |leaf_var| {
            free_vars.contains(&leaf_var).then_some(None)
        })
    }

    /// Like [`Circuit::node_output_bounds`], but each free discrete variable
    /// only ranges over the listed categories.
    pub fn node_output_bounds_restricted(
        &self,
        free: &BTreeMap<usize, Vec<usize>>,
        fixed: &Evidence<F>,
    ) -> Vec<Interval<F>> {
        self.bounds_with(fixed, |leaf_var| free.get(&leaf_var).map(Some))
    }

    /// `domain(var)`: `None` = not free, `Some(None)` = whole domain,
    /// `Some(Some(cats))` = restricted categories.
    fn bounds_with<'a>(
        &self,
        fixed: &Evidence<F>,
        domain: impl Fn(usize) -> Option<Option<&'a Vec<usize>>>,
    ) -> Vec<Interval<F>> {
        let unbounded = Interval {
            lower: F::neg_infinity(),
            upper: F::infinity(),
        };
        let mut out = vec![unbounded; self.nodes.len()];
        for &id in &self.order {
            out[id] = match &self.nodes[id] {
                Node::Leaf(leaf) => match domain(leaf.variable) {
                    None => Interval::point(leaf.log_value(fixed.get(leaf.variable))),
                    Some(None) => {
                        let (lower, upper) = leaf.log_range();
                        Interval { lower, upper }
                    }
                    Some(Some(cats)) => match &leaf.form {
                        LeafForm::Categorical { log_probs } => {
                            let picked = cats.iter().filter_map(|&k| log_probs.get(k).copied());
                            let (lower, upper) = picked
                                .fold((F::infinity(), F::neg_infinity()), |(lo, hi), v| {
                                    (lo.min(v), hi.max(v))
                                });
                            Interval { lower, upper }
                        }
                        LeafForm::Histogram { .. } => {
                            let (lower, upper) = leaf.log_range();
                            Interval { lower, upper }
                        }
                    },
                },
                Node::Product { children } => Interval {
                    lower: children.iter().map(|&c| out[c].lower).sum(),
                    upper: children.iter().map(|&c| out[c].upper).sum(),
                },
                Node::Sum {
                    children,
                    log_weights,
                } => {
                    let mut lower = F::neg_infinity();
                    let mut upper = F::neg_infinity();
                    for (&c, &w) in children.iter().zip(log_weights) {
                        lower = lower.max(out[c].lower + w);
                        upper = upper.max(out[c].upper + w);
                    }
                    Interval { lower, upper }
                }
            };
        }
        out
    }
}

impl<F: Scalar> Circuit<F> {
    /// `Σ_sum-nodes log |children|`: the largest possible gap between exact
    /// and max-product evaluation.
    pub fn max_gap_bound(&self) -> F {
        self.sum_nodes()
            .map(|id| F::of((self.node(id).children().len() as f64).ln()))
            .sum()
    }

    /// Children of `node` paired with their log-weights (empty for non-sums).
    pub fn weighted_children(&self, node: NodeId) -> Vec<(NodeId, F)> {
        match &self.nodes[node] {
            Node::Sum {
                children,
                log_weights,
            } => children
                .iter()
                .copied()
                .zip(log_weights.iter().copied())
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{CircuitBuilder, Value, VariableMeta};
    use super::*;

    #[test]
    fn symmetric_mixture_gives_half() {
        let c = bernoulli_mixture();
        let ev = Evidence::marginal(1).with_category(0, 1);
        assert!((c.evaluate_exact(&ev).unwrap() - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn everything_marginalized_is_log_one() {
        let c = bernoulli_mixture();
        assert!(c.evaluate_exact(&Evidence::marginal(1)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn product_of_fair_coins() {
        let c = coin_pair();
        let ev = Evidence::marginal(2)
            .with_category(0, 1)
            .with_category(1, 1);
        assert!((c.evaluate_exact(&ev).unwrap() - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn max_picks_dominant_child() {
        let c = bernoulli_mixture();
        let ev = Evidence::marginal(1).with_category(0, 1);
        let m = c.evaluate_max(&ev).unwrap();
        assert!((m.log_value - 0.4f64.ln()).abs() < 1e-12);
        assert_eq!(m.active[c.root()], Some(1));
    }

    #[test]
    fn max_ties_break_to_lowest_index() {
        let c = bernoulli_mixture();
        let m = c.evaluate_max(&Evidence::marginal(1)).unwrap();
        assert_eq!(m.active[c.root()], Some(0));
    }

    #[test]
    fn single_child_sum_and_sum_free_circuits_agree_with_exact() {
        let mut b = CircuitBuilder::new(vec![VariableMeta::discrete(0, "x", 3)]);
        let leaf = b.categorical(0, &[0.2, 0.3, 0.5]);
        let root = b.sum(vec![leaf], &[1.0]);
        let c = b.build(root).unwrap();
        for k in 0..3 {
            let ev = Evidence::marginal(1).with_category(0, k);
            assert_eq!(
                c.evaluate_max(&ev).unwrap().log_value,
                c.evaluate_exact(&ev).unwrap()
            );
        }
        let pair = coin_pair();
        let ev = Evidence::marginal(2).with_category(1, 0);
        assert_eq!(
            pair.evaluate_max(&ev).unwrap().log_value,
            pair.evaluate_exact(&ev).unwrap()
        );
    }

    #[test]
    fn conditional_of_deterministic_leaf_is_one() {
        let mut b = CircuitBuilder::new(vec![
            VariableMeta::discrete(0, "x", 2),
            VariableMeta::discrete(1, "y", 2),
        ]);
        let x = b.categorical(0, &[0.3, 0.7]);
        let y = b.categorical(1, &[0.0, 1.0]);
        let root = b.product(vec![x, y]);
        let c = b.build(root).unwrap();
        let target = Evidence::marginal(2).with_category(1, 1);
        let given = Evidence::marginal(2).with_category(0, 0);
        let p = c.conditional_probability(&target, &given).unwrap();
        assert!((p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn conditional_rejects_overlap() {
        let c = coin_pair();
        let ev = Evidence::marginal(2).with_category(0, 1);
        assert!(matches!(
            c.conditional_probability(&ev, &ev),
            Err(Error::InvalidEvidence(_))
        ));
    }

    #[test]
    fn invalid_circuit_refuses_inference() {
        let mut b = CircuitBuilder::new(vec![VariableMeta::discrete(0, "x", 2)]);
        let a = b.categorical(0, &[0.5, 0.5]);
        let root = b.sum(vec![a], &[0.7]);
        let c = b.build(root).unwrap();
        assert!(matches!(
            c.evaluate_exact(&Evidence::marginal(1)),
            Err(Error::InvalidCircuit(..))
        ));
    }

    #[test]
    fn bounds_follow_interval_rules() {
        let free: BTreeSet<usize> = [0].into();
        let mut b = CircuitBuilder::new(vec![VariableMeta::discrete(0, "x", 2)]);
        let leaf = b.categorical(0, &[0.2, 0.8]);
        let single = b.build(leaf).unwrap();
        let bounds = single.node_output_bounds(&free, &Evidence::marginal(1));
        assert!((bounds[0].lower - 0.2f64.ln()).abs() < 1e-12);
        assert!((bounds[0].upper - 0.8f64.ln()).abs() < 1e-12);

        let mut b = CircuitBuilder::new(vec![
            VariableMeta::discrete(0, "x1", 2),
            VariableMeta::discrete(1, "x2", 2),
        ]);
        let l1 = b.categorical(0, &[0.2, 0.8]);
        let l2 = b.categorical(1, &[0.2, 0.8]);
        let root = b.product(vec![l1, l2]);
        let prod = b.build(root).unwrap();
        let both: BTreeSet<usize> = [0, 1].into();
        let r = prod.node_output_bounds(&both, &Evidence::marginal(2))[root];
        assert!((r.lower - 2.0 * 0.2f64.ln()).abs() < 1e-12);
        assert!((r.upper - 2.0 * 0.8f64.ln()).abs() < 1e-12);

        let mix = bernoulli_mixture();
        let r = mix.node_output_bounds(&free, &Evidence::marginal(1))[mix.root()];
        assert!((r.lower - 0.1f64.ln()).abs() < 1e-12);
        assert!((r.upper - 0.4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fixed_variables_give_point_bounds() {
        let mix = bernoulli_mixture();
        let fixed = Evidence::marginal(1).with(0, Value::Category(1));
        let r = mix.node_output_bounds(&BTreeSet::new(), &fixed)[mix.root()];
        assert!((r.lower - 0.4f64.ln()).abs() < 1e-12);
        assert_eq!(r.lower, r.upper);
    }

    #[test]
    fn visit_count_equals_node_count_on_shared_dag() {
        // Leaf `a` is shared by both mixture components.
        let mut b = CircuitBuilder::new(vec![
            VariableMeta::discrete(0, "x", 2),
            VariableMeta::discrete(1, "y", 2),
        ]);
        let a = b.categorical(0, &[0.4, 0.6]);
        let y1 = b.categorical(1, &[0.1, 0.9]);
        let y2 = b.categorical(1, &[0.7, 0.3]);
        let p1 = b.product(vec![a, y1]);
        let p2 = b.product(vec![a, y2]);
        let root = b.sum(vec![p1, p2], &[0.5, 0.5]);
        let c = b.build(root).unwrap();
        let (_, stats) = c.evaluate_exact_with_stats(&Evidence::marginal(2)).unwrap();
        assert_eq!(stats.node_visits, c.len());
    }
}
