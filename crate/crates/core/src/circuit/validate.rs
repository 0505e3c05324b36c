use std::collections::BTreeSet;
use std::fmt;

use super::{Circuit, Node, NodeId};
use crate::scalar::{log_sum_exp, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    Cycle,
    /// Sum node whose weights are mismatched in count or not normalized.
    WeightSum,
    Smoothness,
    Decomposability,
    /// Root scope differs from the full variable set.
    ScopeCover,
    /// Inner node without children.
    Arity,
    /// Leaf table not normalized, below the floor, or of the wrong kind.
    LeafDistribution,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Cycle => "cycle",
            Self::WeightSum => "weight-sum",
            Self::Smoothness => "smoothness",
            Self::Decomposability => "decomposability",
            Self::ScopeCover => "scope-cover",
            Self::Arity => "arity",
            Self::LeafDistribution => "leaf-distribution",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub node: NodeId,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at node {}: {}", self.kind, self.node, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    pub fn at(&self, node: NodeId) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.node == node)
    }
}

/// Lists every structural violation; an empty report means the circuit is a
/// smooth, decomposable SPN with normalized parameters.
pub fn validate<F: Scalar>(circuit: &Circuit<F>) -> ValidationReport {
    circuit.report.clone()
}

pub(super) fn compute_report<F: Scalar>(c: &Circuit<F>) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |node, kind, detail: String| out.push(Violation { node, kind, detail });

    let ordered: BTreeSet<NodeId> = c.order.iter().copied().collect();
    for id in 0..c.nodes.len() {
        if !ordered.contains(&id) && reaches_itself(c, id) {
            push(
                id,
                ViolationKind::Cycle,
                "node is reachable from itself".into(),
            );
        }
    }

    let tol = F::normalization_tolerance();
    for &id in &c.order {
        match &c.nodes[id] {
            Node::Leaf(leaf) => {
                if let Some(msg) = leaf.violation(&c.variables[leaf.variable]) {
                    push(id, ViolationKind::LeafDistribution, msg);
                }
            }
            Node::Sum {
                children,
                log_weights,
            } => {
                if children.is_empty() {
                    push(id, ViolationKind::Arity, "sum node without children".into());
                    continue;
                }
                if children.len() != log_weights.len() {
                    push(
                        id,
                        ViolationKind::WeightSum,
                        format!(
                            "{} children but {} weights",
                            children.len(),
                            log_weights.len()
                        ),
                    );
                } else {
                    let total = log_sum_exp(log_weights.iter().copied()).exp();
                    if !((total - F::one()).abs() <= tol) {
                        push(
                            id,
                            ViolationKind::WeightSum,
                            format!("weights sum to {total}"),
                        );
                    }
                }
                let first = &c.scopes[children[0]];
                if let Some(&bad) = children.iter().find(|&&ch| &c.scopes[ch] != first) {
                    push(
                        id,
                        ViolationKind::Smoothness,
                        format!(
                            "child {bad} has scope {:?}, child {} has {:?}",
                            c.scopes[bad], children[0], first
                        ),
                    );
                }
            }
            Node::Product { children } => {
                if children.is_empty() {
                    push(
                        id,
                        ViolationKind::Arity,
                        "product node without children".into(),
                    );
                    continue;
                }
                let mut seen = BTreeSet::new();
                let overlap: BTreeSet<usize> = children
                    .iter()
                    .flat_map(|&ch| c.scopes[ch].iter().copied())
                    .filter(|&v| !seen.insert(v))
                    .collect();
                if !overlap.is_empty() {
                    push(
                        id,
                        ViolationKind::Decomposability,
                        format!("children share variables {overlap:?}"),
                    );
                }
            }
        }
    }

    if ordered.contains(&c.root) {
        let root_scope = &c.scopes[c.root];
        if root_scope.len() != c.variables.len() {
            let missing: Vec<usize> = (0..c.variables.len())
                .filter(|v| root_scope.binary_search(v).is_err())
                .collect();
            push(
                c.root,
                ViolationKind::ScopeCover,
                format!("root misses variables {missing:?}"),
            );
        }
    }

    ValidationReport { violations: out }
}

fn reaches_itself<F>(c: &Circuit<F>, start: NodeId) -> bool {
    let mut stack: Vec<NodeId> = c.nodes[start].children().to_vec();
    let mut seen = BTreeSet::new();
    while let Some(id) = stack.pop() {
        if id == start {
            return true;
        }
        if seen.insert(id) {
            stack.extend_from_slice(c.nodes[id].children());
        }
    }
    false
}
