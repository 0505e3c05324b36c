//! Sum-product networks: representation, structural validation and
//! log-space inference.
//!
//! A [`Circuit`] is an immutable rooted DAG of sum, product and leaf nodes.
//! Scopes, a topological order and the validation report are computed once
//! at construction; every query afterwards is a read-only pass over that
//! order, so a circuit can be shared freely between threads.

mod evidence;
mod inference;
mod io;
mod leaf;
mod sample;
mod validate;

use std::collections::BTreeSet;

pub use evidence::{Evidence, Value};
pub use inference::{InferenceStats, Interval, MaxEvaluation};
pub use io::{from_json, to_json};
pub use leaf::{LeafForm, LeafModel};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum VarKind<F = f64> {
    Discrete { cardinality: usize },
    Continuous { lower: F, upper: F },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariableMeta<F = f64> {
    pub id: usize,
    pub name: String,
    pub kind: VarKind<F>,
}

impl VariableMeta<f64> {
    pub fn discrete(id: usize, name: impl Into<String>, cardinality: usize) -> Self {
        Self::new(id, name, VarKind::Discrete { cardinality })
    }

    pub fn continuous(id: usize, name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self::new(id, name, VarKind::Continuous { lower, upper })
    }
}

impl<F: Scalar> VariableMeta<F> {
    pub fn new(id: usize, name: impl Into<String>, kind: VarKind<F>) -> Self {
        Self {
            id,
            name: name.into(),
            kind,
        }
    }

    pub fn cardinality(&self) -> Option<usize> {
        match self.kind {
            VarKind::Discrete { cardinality } => Some(cardinality),
            VarKind::Continuous { .. } => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, VarKind::Discrete { .. })
    }

    fn check(&self, index: usize) -> Result<()> {
        if self.id != index {
            return Err(Error::MalformedCircuit(format!(
                "variable at position {index} carries id {}",
                self.id
            )));
        }
        match self.kind {
            VarKind::Discrete { cardinality } if cardinality == 0 => Err(Error::MalformedCircuit(
                format!("variable `{}` has zero cardinality", self.name),
            )),
            VarKind::Continuous { lower, upper } if !(lower < upper) => {
                Err(Error::MalformedCircuit(format!(
                    "variable `{}` has empty domain [{lower}, {upper}]",
                    self.name
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn cast<G: Scalar>(&self) -> VariableMeta<G> {
        let kind = match self.kind {
            VarKind::Discrete { cardinality } => VarKind::Discrete { cardinality },
            VarKind::Continuous { lower, upper } => VarKind::Continuous {
                lower: G::of(lower.as_f64()),
                upper: G::of(upper.as_f64()),
            },
        };
        VariableMeta {
            id: self.id,
            name: self.name.clone(),
            kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node<F = f64> {
    Sum {
        children: Vec<NodeId>,
        log_weights: Vec<F>,
    },
    Product {
        children: Vec<NodeId>,
    },
    Leaf(LeafModel<F>),
}

impl<F> Node<F> {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Sum { children, .. } | Node::Product { children } => children,
            Node::Leaf(_) => &[],
        }
    }

    pub fn is_sum(&self) -> bool {
        matches!(self, Node::Sum { .. })
    }
}

#[derive(Clone, Debug)]
pub struct Circuit<F = f64> {
    variables: Vec<VariableMeta<F>>,
    nodes: Vec<Node<F>>,
    root: NodeId,
    scopes: Vec<Vec<usize>>,
    order: Vec<NodeId>,
    report: ValidationReport,
}

impl<F: Scalar> Circuit<F> {
    /// Builds a circuit, computing scopes, evaluation order and the
    /// validation report.
    ///
    /// Only referential problems (dangling ids, malformed variable metadata)
    /// are errors here; structural violations end up in [`Circuit::report`].
    pub fn new(variables: Vec<VariableMeta<F>>, nodes: Vec<Node<F>>, root: NodeId) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            v.check(i)?;
        }
        if root >= nodes.len() {
            return Err(Error::MalformedCircuit(format!(
                "root {root} out of range ({} nodes)",
                nodes.len()
            )));
        }
        for (id, node) in nodes.iter().enumerate() {
            if let Some(&bad) = node.children().iter().find(|&&c| c >= nodes.len()) {
                return Err(Error::MalformedCircuit(format!(
                    "node {id} references missing child {bad}"
                )));
            }
            if let Node::Leaf(leaf) = node {
                if leaf.variable >= variables.len() {
                    return Err(Error::MalformedCircuit(format!(
                        "leaf {id} references missing variable {}",
                        leaf.variable
                    )));
                }
            }
        }

        let order = topological_order(&nodes);
        let mut scopes = vec![Vec::new(); nodes.len()];
        for &id in &order {
            scopes[id] = match &nodes[id] {
                Node::Leaf(leaf) => vec![leaf.variable],
                node => {
                    let set: BTreeSet<usize> = node
                        .children()
                        .iter()
                        .flat_map(|&c| scopes[c].iter().copied())
                        .collect();
                    set.into_iter().collect()
                }
            };
        }

        let mut circuit = Self {
            variables,
            nodes,
            root,
            scopes,
            order,
            report: ValidationReport::default(),
        };
        circuit.report = validate::compute_report(&circuit);
        Ok(circuit)
    }

    pub fn variables(&self) -> &[VariableMeta<F>] {
        &self.variables
    }

    pub fn variable_by_name(&self, name: &str) -> Option<&VariableMeta<F>> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn nodes(&self) -> &[Node<F>] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node<F> {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Variable ids covered by `node`, ascending.
    pub fn scope(&self, node: NodeId) -> &[usize] {
        &self.scopes[node]
    }

    /// Nodes in an order where every child precedes its parents. Nodes on
    /// or above a cycle are absent.
    pub fn evaluation_order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn is_valid(&self) -> bool {
        self.report.is_valid()
    }

    pub fn sum_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_sum())
    }

    /// Re-targets the circuit to another scalar type.
    pub fn cast<G: Scalar>(&self) -> Circuit<G> {
        let variables = self.variables.iter().map(VariableMeta::cast).collect();
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n {
                Node::Sum {
                    children,
                    log_weights,
                } => Node::Sum {
                    children: children.clone(),
                    log_weights: log_weights.iter().map(|w| G::of(w.as_f64())).collect(),
                },
                Node::Product { children } => Node::Product {
                    children: children.clone(),
                },
                Node::Leaf(leaf) => Node::Leaf(leaf.cast()),
            })
            .collect();
        Circuit::new(variables, nodes, self.root).expect("casting preserves references")
    }
}

/// Kahn's algorithm over the child relation; children come first.
fn topological_order<F>(nodes: &[Node<F>]) -> Vec<NodeId> {
    let n = nodes.len();
    let mut pending: Vec<usize> = nodes.iter().map(|node| node.children().len()).collect();
    let mut parents = vec![Vec::new(); n];
    for (id, node) in nodes.iter().enumerate() {
        for &c in node.children() {
            parents[c].push(id);
        }
    }
    let mut ready: Vec<NodeId> = (0..n).filter(|&i| pending[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(id) = ready.pop() {
        order.push(id);
        for &p in &parents[id] {
            pending[p] -= 1;
            if pending[p] == 0 {
                ready.push(p);
            }
        }
    }
    order
}

/// Incremental constructor used by the learner and by tests.
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder<F = f64> {
    variables: Vec<VariableMeta<F>>,
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> CircuitBuilder<F> {
    pub fn new(variables: Vec<VariableMeta<F>>) -> Self {
        Self {
            variables,
            nodes: Vec::new(),
        }
    }

    pub fn leaf(&mut self, leaf: LeafModel<F>) -> NodeId {
        self.push(Node::Leaf(leaf))
    }

    /// Adds a categorical leaf from plain probabilities.
    pub fn categorical(&mut self, variable: usize, probs: &[f64]) -> NodeId {
        self.leaf(LeafModel::categorical(variable, probs))
    }

    pub fn product(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Product { children })
    }

    /// Adds a sum node from plain (linear-space) weights.
    pub fn sum(&mut self, children: Vec<NodeId>, weights: &[f64]) -> NodeId {
        let log_weights = weights.iter().map(|w| F::of(w.ln())).collect();
        self.push(Node::Sum {
            children,
            log_weights,
        })
    }

    pub fn sum_log(&mut self, children: Vec<NodeId>, log_weights: Vec<F>) -> NodeId {
        self.push(Node::Sum {
            children,
            log_weights,
        })
    }

    pub fn push(&mut self, node: Node<F>) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn build(self, root: NodeId) -> Result<Circuit<F>> {
        Circuit::new(self.variables, self.nodes, root)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn scopes_are_unions_of_children() {
        let c = coin_pair();
        assert_eq!(c.scope(c.root()), &[0, 1]);
        assert_eq!(c.evaluation_order().last(), Some(&c.root()));
    }

    #[test]
    fn dangling_child_is_malformed() {
        let vars = vec![VariableMeta::discrete(0, "x", 2)];
        let nodes = vec![Node::Product { children: vec![3] }];
        assert!(matches!(
            Circuit::new(vars, nodes, 0),
            Err(Error::MalformedCircuit(_))
        ));
    }

    #[test]
    fn bad_variable_metadata_is_malformed() {
        let vars = vec![VariableMeta::continuous(0, "t", 1.0, 1.0)];
        let nodes = vec![Node::Leaf(LeafModel::histogram(
            0,
            vec![0.0, 1.0],
            vec![1.0],
        ))];
        assert!(Circuit::new(vars, nodes, 0).is_err());
    }

    #[test]
    fn cast_round_trips_structure() {
        let c = bernoulli_mixture();
        let c32: Circuit<f32> = c.cast();
        assert!(c32.is_valid());
        assert_eq!(c32.len(), c.len());
    }
}
