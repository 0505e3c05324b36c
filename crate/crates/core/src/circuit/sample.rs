use rand::Rng;

use super::{Circuit, Evidence, LeafForm, Node, Value};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

impl<F: Scalar> Circuit<F> {
    /// Ancestral sample of a full assignment conditioned on `given`.
    ///
    /// Sum nodes pick a child with probability proportional to
    /// weight × child likelihood of the evidence; assigned variables are
    /// returned unchanged.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        given: &Evidence<F>,
    ) -> Result<Vec<Value<F>>> {
        let values = self.node_log_values(given)?;
        if values[self.root] == F::neg_infinity() {
            return Err(Error::UndefinedConditional);
        }
        let mut out: Vec<Option<Value<F>>> = (0..self.variables.len())
            .map(|v| given.get(v).copied())
            .collect();

        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match &self.nodes[id] {
                Node::Product { children } => stack.extend(children.iter().rev()),
                Node::Sum {
                    children,
                    log_weights,
                } => {
                    let logits: Vec<f64> = children
                        .iter()
                        .zip(log_weights)
                        .map(|(&c, &w)| (values[c] + w - values[id]).as_f64())
                        .collect();
                    stack.push(children[draw_index(rng, logits.iter().map(|l| l.exp()))]);
                }
                Node::Leaf(leaf) => {
                    if out[leaf.variable].is_some() {
                        continue;
                    }
                    let drawn = match &leaf.form {
                        LeafForm::Categorical { log_probs } => Value::Category(draw_index(
                            rng,
                            log_probs.iter().map(|p| p.as_f64().exp()),
                        )),
                        LeafForm::Histogram {
                            bin_edges,
                            log_densities,
                        } => {
                            let masses = bin_edges
                                .windows(2)
                                .zip(log_densities)
                                .map(|(w, d)| (w[1] - w[0]).as_f64() * d.as_f64().exp());
                            let b = draw_index(rng, masses);
                            let (lo, hi) = (bin_edges[b].as_f64(), bin_edges[b + 1].as_f64());
                            Value::Real(F::of(lo + (hi - lo) * rng.random::<f64>()))
                        }
                    };
                    out[leaf.variable] = Some(drawn);
                }
            }
        }

        out.into_iter()
            .enumerate()
            .map(|(v, value)| {
                value.ok_or_else(|| {
                    Error::MalformedCircuit(format!("no leaf reached for variable {v}"))
                })
            })
            .collect()
    }
}

/// Index drawn proportionally to the (unnormalized) weights.
fn draw_index<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last
}
