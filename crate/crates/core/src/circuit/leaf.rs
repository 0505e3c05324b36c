use super::{Value, VarKind, VariableMeta};
use crate::scalar::{log_sum_exp, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum LeafForm<F = f64> {
    Categorical {
        log_probs: Vec<F>,
    },
    /// Piecewise-constant density; `bin_edges` has one more entry than
    /// `log_densities`.
    Histogram {
        bin_edges: Vec<F>,
        log_densities: Vec<F>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeafModel<F = f64> {
    pub variable: usize,
    pub form: LeafForm<F>,
}

impl<F: Scalar> LeafModel<F> {
    /// Categorical leaf from linear probabilities, floored in log-space.
    pub fn categorical(variable: usize, probs: &[f64]) -> Self {
        let log_probs = probs
            .iter()
            .map(|&p| F::of(p.ln()).max(F::log_floor()))
            .collect();
        Self {
            variable,
            form: LeafForm::Categorical { log_probs },
        }
    }

    pub fn categorical_log(variable: usize, log_probs: Vec<F>) -> Self {
        Self {
            variable,
            form: LeafForm::Categorical { log_probs },
        }
    }

    /// Histogram leaf from linear densities, floored in log-space.
    pub fn histogram(variable: usize, bin_edges: Vec<f64>, densities: Vec<f64>) -> Self {
        let log_densities = densities
            .iter()
            .map(|&d| F::of(d.ln()).max(F::log_floor()))
            .collect();
        let bin_edges = bin_edges.into_iter().map(F::of).collect();
        Self {
            variable,
            form: LeafForm::Histogram {
                bin_edges,
                log_densities,
            },
        }
    }

    pub fn histogram_log(variable: usize, bin_edges: Vec<F>, log_densities: Vec<F>) -> Self {
        Self {
            variable,
            form: LeafForm::Histogram {
                bin_edges,
                log_densities,
            },
        }
    }

    /// Log-output for an assigned value; `None` (marginalized) gives 0.
    ///
    /// Histogram values outside the binned range get the floor density.
    pub fn log_value(&self, value: Option<&Value<F>>) -> F {
        match (value, &self.form) {
            (None, _) => F::zero(),
            (Some(Value::Category(k)), LeafForm::Categorical { log_probs }) => {
                log_probs.get(*k).copied().unwrap_or(F::neg_infinity())
            }
            (
                Some(Value::Real(x)),
                LeafForm::Histogram {
                    bin_edges,
                    log_densities,
                },
            ) => match bin_index(bin_edges, *x) {
                Some(b) => log_densities[b],
                None => F::log_floor(),
            },
            // Kind mismatches are rejected by evidence checking before we get here.
            _ => F::neg_infinity(),
        }
    }

    /// Smallest and largest entry of the log table.
    pub fn log_range(&self) -> (F, F) {
        let table = self.table();
        let lo = table.iter().fold(F::infinity(), |a, &b| a.min(b));
        let hi = table.iter().fold(F::neg_infinity(), |a, &b| a.max(b));
        match self.form {
            // An out-of-range value evaluates to the floor.
            LeafForm::Histogram { .. } => (lo.min(F::log_floor()), hi),
            LeafForm::Categorical { .. } => (lo, hi),
        }
    }

    pub fn table(&self) -> &[F] {
        match &self.form {
            LeafForm::Categorical { log_probs } => log_probs,
            LeafForm::Histogram { log_densities, .. } => log_densities,
        }
    }

    /// Describes the first broken leaf invariant, if any.
    pub(crate) fn violation(&self, meta: &VariableMeta<F>) -> Option<String> {
        let tol = F::normalization_tolerance();
        let floor = F::log_floor();
        match (&self.form, &meta.kind) {
            (LeafForm::Categorical { log_probs }, VarKind::Discrete { cardinality }) => {
                if log_probs.len() != *cardinality {
                    return Some(format!(
                        "categorical table has {} entries for cardinality {cardinality}",
                        log_probs.len()
                    ));
                }
                if let Some(p) = log_probs
                    .iter()
                    .find(|p| !(**p >= floor) || p.is_infinite())
                {
                    return Some(format!("log-probability {p} below floor {floor}"));
                }
                let total = log_sum_exp(log_probs.iter().copied()).exp();
                if (total - F::one()).abs() > tol {
                    return Some(format!("probabilities sum to {total}"));
                }
                None
            }
            (
                LeafForm::Histogram {
                    bin_edges,
                    log_densities,
                },
                VarKind::Continuous { .. },
            ) => {
                if log_densities.is_empty() || bin_edges.len() != log_densities.len() + 1 {
                    return Some(format!(
                        "{} edges for {} bins",
                        bin_edges.len(),
                        log_densities.len()
                    ));
                }
                if bin_edges.windows(2).any(|w| !(w[0] < w[1])) {
                    return Some("bin edges not strictly ascending".into());
                }
                if let Some(d) = log_densities
                    .iter()
                    .find(|d| !(**d >= floor) || d.is_infinite())
                {
                    return Some(format!("log-density {d} below floor {floor}"));
                }
                let mass: F = bin_edges
                    .windows(2)
                    .zip(log_densities)
                    .map(|(w, &d)| (w[1] - w[0]) * d.exp())
                    .sum();
                // Edge rounding moves each bin's mass by about ε·|edge|·density.
                let rounding: F = bin_edges
                    .windows(2)
                    .zip(log_densities)
                    .map(|(w, &d)| (w[0].abs() + w[1].abs()) * d.exp())
                    .sum::<F>()
                    * F::epsilon();
                if (mass - F::one()).abs() > tol + rounding {
                    return Some(format!("histogram integrates to {mass}"));
                }
                None
            }
            _ => Some(format!(
                "leaf form does not match kind of variable `{}`",
                meta.name
            )),
        }
    }

    pub(crate) fn cast<G: Scalar>(&self) -> LeafModel<G> {
        let conv = |v: &[F]| v.iter().map(|x| G::of(x.as_f64())).collect::<Vec<G>>();
        let form = match &self.form {
            LeafForm::Categorical { log_probs } => LeafForm::Categorical {
                log_probs: conv(log_probs),
            },
            LeafForm::Histogram {
                bin_edges,
                log_densities,
            } => LeafForm::Histogram {
                bin_edges: conv(bin_edges),
                log_densities: conv(log_densities),
            },
        };
        LeafModel {
            variable: self.variable,
            form,
        }
    }
}

/// Bin containing `x`; the last bin is closed on the right.
pub(crate) fn bin_index<F: Scalar>(edges: &[F], x: F) -> Option<usize> {
    let bins = edges.len().checked_sub(1)?;
    if bins == 0 || !(x >= edges[0]) || !(x <= edges[bins]) {
        return None;
    }
    // partition_point gives the count of edges <= x.
    let idx = edges.partition_point(|&e| e <= x);
    Some(idx.saturating_sub(1).min(bins - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_lookup_edges() {
        let edges = [0.0, 1.0, 2.0, 4.0];
        assert_eq!(bin_index(&edges, 0.0), Some(0));
        assert_eq!(bin_index(&edges, 0.999), Some(0));
        assert_eq!(bin_index(&edges, 1.0), Some(1));
        assert_eq!(bin_index(&edges, 4.0), Some(2));
        assert_eq!(bin_index(&edges, 4.0001), None);
        assert_eq!(bin_index(&edges, -0.1), None);
        assert_eq!(bin_index(&edges, f64::NAN), None);
    }

    #[test]
    fn out_of_range_histogram_value_hits_the_floor() {
        let leaf = LeafModel::<f64>::histogram(0, vec![0.0, 0.5, 1.0], vec![1.0, 1.0]);
        assert_eq!(leaf.log_value(Some(&Value::Real(0.25))), 0.0);
        assert_eq!(leaf.log_value(Some(&Value::Real(7.0))), -30.0);
        assert_eq!(leaf.log_value(None), 0.0);
    }

    #[test]
    fn categorical_violations_are_described() {
        let meta = VariableMeta::discrete(0, "x", 2);
        let ok = LeafModel::<f64>::categorical(0, &[0.25, 0.75]);
        assert!(ok.violation(&meta).is_none());
        let unnormalized = LeafModel::<f64>::categorical(0, &[0.5, 0.6]);
        assert!(unnormalized.violation(&meta).unwrap().contains("sum to"));
        let wrong_arity = LeafModel::<f64>::categorical(0, &[1.0]);
        assert!(wrong_arity.violation(&meta).is_some());
    }
}
