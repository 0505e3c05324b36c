use super::{VarKind, VariableMeta};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value<F = f64> {
    Category(usize),
    Real(F),
}

/// Per-variable assignment; `None` means marginalized.
#[derive(Clone, Debug, PartialEq)]
pub struct Evidence<F = f64> {
    values: Vec<Option<Value<F>>>,
}

impl<F: Scalar> Evidence<F> {
    /// Everything marginalized.
    pub fn marginal(num_vars: usize) -> Self {
        Self {
            values: vec![None; num_vars],
        }
    }

    pub fn from_values(values: Vec<Option<Value<F>>>) -> Self {
        Self { values }
    }

    /// Full assignment.
    pub fn full(values: Vec<Value<F>>) -> Self {
        Self {
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn with(mut self, var: usize, value: Value<F>) -> Self {
        self.set(var, Some(value));
        self
    }

    pub fn with_category(self, var: usize, k: usize) -> Self {
        self.with(var, Value::Category(k))
    }

    pub fn set(&mut self, var: usize, value: Option<Value<F>>) {
        if var >= self.values.len() {
            self.values.resize(var + 1, None);
        }
        self.values[var] = value;
    }

    pub fn get(&self, var: usize) -> Option<&Value<F>> {
        self.values.get(var).and_then(Option::as_ref)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<Value<F>>] {
        &self.values
    }

    pub fn assigned(&self) -> impl Iterator<Item = (usize, &Value<F>)> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.as_ref().map(|v| (i, v)))
    }

    /// Union of two evidences over disjoint variable sets.
    pub fn union(&self, other: &Self) -> Result<Self> {
        let n = self.values.len().max(other.values.len());
        let mut out = Self::marginal(n);
        for i in 0..n {
            match (self.get(i), other.get(i)) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidEvidence(format!(
                        "variable {i} is assigned on both sides"
                    )))
                }
                (Some(v), None) | (None, Some(v)) => out.set(i, Some(*v)),
                (None, None) => {}
            }
        }
        Ok(out)
    }

    /// Checks kinds and domains against the circuit variables.
    pub(crate) fn check(&self, variables: &[VariableMeta<F>]) -> Result<()> {
        if self.values.len() > variables.len() {
            if let Some((i, _)) = self.assigned().find(|(i, _)| *i >= variables.len()) {
                return Err(Error::InvalidEvidence(format!("unknown variable {i}")));
            }
        }
        for (i, value) in self.assigned() {
            let meta = &variables[i];
            match (value, &meta.kind) {
                (Value::Category(k), VarKind::Discrete { cardinality }) => {
                    if k >= cardinality {
                        return Err(Error::InvalidEvidence(format!(
                            "category {k} out of range for `{}` (cardinality {cardinality})",
                            meta.name
                        )));
                    }
                }
                (Value::Real(x), VarKind::Continuous { .. }) => {
                    if !x.is_finite() {
                        return Err(Error::InvalidEvidence(format!(
                            "non-finite value for `{}`",
                            meta.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidEvidence(format!(
                        "value kind does not match variable `{}`",
                        meta.name
                    )))
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_rejects_overlap() {
        let a = Evidence::<f64>::marginal(3).with_category(0, 1);
        let b = Evidence::<f64>::marginal(3).with_category(2, 0);
        let u = a.union(&b).unwrap();
        assert_eq!(u.assigned().count(), 2);
        assert!(a.union(&a).is_err());
    }

    #[test]
    fn check_catches_kind_and_range() {
        let vars = vec![
            VariableMeta::discrete(0, "d", 3),
            VariableMeta::continuous(1, "c", 0.0, 1.0),
        ];
        assert!(Evidence::marginal(2)
            .with_category(0, 2)
            .check(&vars)
            .is_ok());
        assert!(Evidence::marginal(2)
            .with_category(0, 3)
            .check(&vars)
            .is_err());
        assert!(Evidence::marginal(2)
            .with_category(1, 0)
            .check(&vars)
            .is_err());
        assert!(Evidence::marginal(2)
            .with(1, Value::Real(f64::NAN))
            .check(&vars)
            .is_err());
        // Reals outside the nominal domain are allowed; histograms floor them.
        assert!(Evidence::marginal(2)
            .with(1, Value::Real(5.0))
            .check(&vars)
            .is_ok());
        assert!(Evidence::marginal(4)
            .with_category(3, 0)
            .check(&vars)
            .is_err());
    }
}
