use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type VarId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarType {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Variable<F = f64> {
    pub name: String,
    pub kind: VarType,
    pub lower: F,
    pub upper: F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// `Σ coef·x  sense  rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Constraint<F = f64> {
    pub name: String,
    pub terms: Vec<(VarId, F)>,
    pub sense: Sense,
    pub rhs: F,
}

impl<F: Scalar> Constraint<F> {
    pub fn lhs(&self, x: &[F]) -> F {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[F]) -> F {
        let d = self.lhs(x) - self.rhs;
        match self.sense {
            Sense::Le => d.max(F::zero()),
            Sense::Ge => (-d).max(F::zero()),
            Sense::Eq => d.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSense {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Objective<F = f64> {
    pub sense: ObjectiveSense,
    pub terms: Vec<(VarId, F)>,
}

/// Mixed-binary linear model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct MilpModel<F = f64> {
    pub variables: Vec<Variable<F>>,
    pub constraints: Vec<Constraint<F>>,
    pub objective: Objective<F>,
}

impl<F: Scalar> MilpModel<F> {
    pub fn new() -> Self {
        Self {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective::default(),
        }
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: F, upper: F) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            kind: VarType::Continuous,
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            kind: VarType::Binary,
            lower: F::zero(),
            upper: F::one(),
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, F)>,
        sense: Sense,
        rhs: F,
    ) -> Result<usize> {
        let name = name.into();
        if terms.is_empty() {
            return Err(Error::InvalidModel(format!(
                "constraint `{name}` has no terms"
            )));
        }
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| *v >= self.variables.len()) {
            return Err(Error::InvalidModel(format!(
                "constraint `{name}` references undeclared variable {v}"
            )));
        }
        if !rhs.is_finite() || terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "constraint `{name}` has a non-finite coefficient"
            )));
        }
        self.constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs,
        });
        Ok(self.constraints.len() - 1)
    }

    pub fn set_objective(&mut self, sense: ObjectiveSense, terms: Vec<(VarId, F)>) -> Result<()> {
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| *v >= self.variables.len()) {
            return Err(Error::InvalidModel(format!(
                "objective references undeclared variable {v}"
            )));
        }
        self.objective = Objective { sense, terms };
        Ok(())
    }

    pub fn num_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarType::Binary)
            .count()
    }

    pub fn objective_value(&self, x: &[F]) -> F {
        self.objective.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Largest violation over bounds, integrality and constraints.
    pub fn max_violation(&self, x: &[F]) -> F {
        let mut worst = F::zero();
        for (v, &xv) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
            if v.kind == VarType::Binary {
                worst = worst.max((xv - xv.round()).abs());
            }
        }
        self.constraints
            .iter()
            .fold(worst, |w, c| w.max(c.violation(x)))
    }

    /// Checks every constraint, bound and integrality requirement within `tol`.
    pub fn check_feasible(&self, x: &[F], tol: F) -> Result<()> {
        if x.len() != self.variables.len() {
            return Err(Error::InvalidModel(format!(
                "assignment has {} values for {} variables",
                x.len(),
                self.variables.len()
            )));
        }
        for (v, &xv) in self.variables.iter().zip(x) {
            if xv < v.lower - tol || xv > v.upper + tol {
                return Err(Error::InvalidModel(format!(
                    "{} = {xv} outside [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if v.kind == VarType::Binary && (xv - xv.round()).abs() > tol {
                return Err(Error::InvalidModel(format!(
                    "{} = {xv} is not binary",
                    v.name
                )));
            }
        }
        for c in &self.constraints {
            let viol = c.violation(x);
            if viol > tol {
                return Err(Error::InvalidModel(format!(
                    "constraint `{}` violated by {viol}",
                    c.name
                )));
            }
        }
        Ok(())
    }

    pub fn cast<G: Scalar>(&self) -> MilpModel<G> {
        let g = |x: F| G::of(x.as_f64());
        MilpModel {
            variables: self
                .variables
                .iter()
                .map(|v| Variable {
                    name: v.name.clone(),
                    kind: v.kind,
                    lower: g(v.lower),
                    upper: g(v.upper),
                })
                .collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint {
                    name: c.name.clone(),
                    terms: c.terms.iter().map(|&(v, k)| (v, g(k))).collect(),
                    sense: c.sense,
                    rhs: g(c.rhs),
                })
                .collect(),
            objective: Objective {
                sense: self.objective.sense,
                terms: self
                    .objective
                    .terms
                    .iter()
                    .map(|&(v, k)| (v, g(k)))
                    .collect(),
            },
        }
    }
}
