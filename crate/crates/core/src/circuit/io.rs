//! JSON document form of a circuit.
//!
//! ```json
//! {"variables": [{"kind": "discrete", "id": 0, "name": "x", "cardinality": 2}],
//!  "nodes": [{"kind": "leaf", "variable": 0, "form": "categorical", "log_probs": [...]}],
//!  "root": 0}
//! ```
//!
//! Every real is written with 17 significant digits, which round-trips
//! binary64 values exactly.

use serde::de::Deserializer;
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{Circuit, LeafForm, LeafModel, Node, VarKind, VariableMeta};
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!(
                "cannot encode non-finite value {}",
                self.0
            )));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(S::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Real)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum VariableDoc {
    Discrete {
        id: usize,
        name: String,
        cardinality: usize,
    },
    Continuous {
        id: usize,
        name: String,
        lower: Real,
        upper: Real,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum NodeDoc {
    Sum {
        children: Vec<usize>,
        log_weights: Vec<Real>,
    },
    Product {
        children: Vec<usize>,
    },
    Leaf {
        variable: usize,
        form: FormTag,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_probs: Option<Vec<Real>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bin_edges: Option<Vec<Real>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_densities: Option<Vec<Real>>,
    },
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum FormTag {
    Categorical,
    Histogram,
}

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    variables: Vec<VariableDoc>,
    nodes: Vec<NodeDoc>,
    root: usize,
}

fn reals<F: Scalar>(v: &[F]) -> Vec<Real> {
    v.iter().map(|x| Real(x.as_f64())).collect()
}

fn scalars<F: Scalar>(v: Vec<Real>) -> Vec<F> {
    v.into_iter().map(|r| F::of(r.0)).collect()
}

impl<F: Scalar> From<&Circuit<F>> for CircuitDoc {
    fn from(c: &Circuit<F>) -> Self {
        let variables = c
            .variables
            .iter()
            .map(|v| match v.kind {
                VarKind::Discrete { cardinality } => VariableDoc::Discrete {
                    id: v.id,
                    name: v.name.clone(),
                    cardinality,
                },
                VarKind::Continuous { lower, upper } => VariableDoc::Continuous {
                    id: v.id,
                    name: v.name.clone(),
                    lower: Real(lower.as_f64()),
                    upper: Real(upper.as_f64()),
                },
            })
            .collect();
        let nodes = c
            .nodes
            .iter()
            .map(|n| match n {
                Node::Sum {
                    children,
                    log_weights,
                } => NodeDoc::Sum {
                    children: children.clone(),
                    log_weights: reals(log_weights),
                },
                Node::Product { children } => NodeDoc::Product {
                    children: children.clone(),
                },
                Node::Leaf(leaf) => match &leaf.form {
                    LeafForm::Categorical { log_probs } => NodeDoc::Leaf {
                        variable: leaf.variable,
                        form: FormTag::Categorical,
                        log_probs: Some(reals(log_probs)),
                        bin_edges: None,
                        log_densities: None,
                    },
                    LeafForm::Histogram {
                        bin_edges,
                        log_densities,
                    } => NodeDoc::Leaf {
                        variable: leaf.variable,
                        form: FormTag::Histogram,
                        log_probs: None,
                        bin_edges: Some(reals(bin_edges)),
                        log_densities: Some(reals(log_densities)),
                    },
                },
            })
            .collect();
        CircuitDoc {
            variables,
            nodes,
            root: c.root,
        }
    }
}

impl CircuitDoc {
    fn into_circuit<F: Scalar>(self) -> Result<Circuit<F>> {
        use crate::error::Error;
        let variables = self
            .variables
            .into_iter()
            .map(|v| match v {
                VariableDoc::Discrete {
                    id,
                    name,
                    cardinality,
                } => VariableMeta::new(id, name, VarKind::Discrete { cardinality }),
                VariableDoc::Continuous {
                    id,
                    name,
                    lower,
                    upper,
                } => VariableMeta::new(
                    id,
                    name,
                    VarKind::Continuous {
                        lower: F::of(lower.0),
                        upper: F::of(upper.0),
                    },
                ),
            })
            .collect();
        let nodes = self
            .nodes
            .into_iter()
            .enumerate()
            .map(|(id, n)| match n {
                NodeDoc::Sum {
                    children,
                    log_weights,
                } => Ok(Node::Sum {
                    children,
                    log_weights: scalars(log_weights),
                }),
                NodeDoc::Product { children } => Ok(Node::Product { children }),
                NodeDoc::Leaf {
                    variable,
                    form,
                    log_probs,
                    bin_edges,
                    log_densities,
                } => {
                    let missing =
                        |field: &str| Error::MalformedCircuit(format!("leaf {id} lacks `{field}`"));
                    let form = match form {
                        FormTag::Categorical => LeafForm::Categorical {
                            log_probs: scalars(log_probs.ok_or_else(|| missing("log_probs"))?),
                        },
                        FormTag::Histogram => LeafForm::Histogram {
                            bin_edges: scalars(bin_edges.ok_or_else(|| missing("bin_edges"))?),
                            log_densities: scalars(
                                log_densities.ok_or_else(|| missing("log_densities"))?,
                            ),
                        },
                    };
                    Ok(Node::Leaf(LeafModel { variable, form }))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Circuit::new(variables, nodes, self.root)
    }
}

/// Serializes the circuit to its JSON document (compact, one line).
pub fn to_json<F: Scalar>(circuit: &Circuit<F>) -> Result<String> {
    Ok(serde_json::to_string(&CircuitDoc::from(circuit))?)
}

pub fn from_json<F: Scalar>(text: &str) -> Result<Circuit<F>> {
    let doc: CircuitDoc = serde_json::from_str(text)?;
    doc.into_circuit()
}

impl<F: Scalar> Serialize for Circuit<F> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CircuitDoc::from(self).serialize(s)
    }
}

impl<'de, F: Scalar> Deserialize<'de> for Circuit<F> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        CircuitDoc::deserialize(d)?
            .into_circuit()
            .map_err(D::Error::custom)
    }
}
