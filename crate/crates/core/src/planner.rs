//! Least-cost PV + battery designs under a shortfall chance constraint.
//!
//! Four methods share one tie-break: cost (within 1e-9), then fewer total
//! units, then the lexicographically smaller `(pv_units, battery_units)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Evidence};
use crate::error::{Error, Result};
use crate::milp::{log_epsilon, solve, ChanceProgram, DenominatorMode, SolveLimits, SolveStatus};
use crate::sim::{
    row_rng, sample_environment, shortfall_label, Dataset, DesignConfig, DesignGrid, DesignSampler,
    EnvParams, EnvScenario, SimParams,
};

/// Stream namespace for GEP scenario draws.
const GEP_STREAM: u64 = 1 << 61;

const COST_TIE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    pub pv_unit_cost: f64,
    pub battery_unit_cost: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            pv_unit_cost: 1.0,
            battery_unit_cost: 0.6,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [
            ("pv_unit_cost", self.pv_unit_cost),
            ("battery_unit_cost", self.battery_unit_cost),
        ] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn cost(&self, pv_units: usize, battery_units: usize) -> f64 {
        pv_units as f64 * self.pv_unit_cost + battery_units as f64 * self.battery_unit_cost
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    SpnMax,
    SpnExact,
    Empirical,
    /// Scenario baseline with `K` sampled days.
    Gep(usize),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::SpnMax => f.write_str("spn_max"),
            Method::SpnExact => f.write_str("spn_exact"),
            Method::Empirical => f.write_str("empirical"),
            Method::Gep(k) => write!(f, "gep{k}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spn_max" => Ok(Method::SpnMax),
            "spn_exact" => Ok(Method::SpnExact),
            "empirical" => Ok(Method::Empirical),
            _ => s
                .strip_prefix("gep")
                .map(|k| k.strip_prefix('_').unwrap_or(k))
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k > 0)
                .map(Method::Gep)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "unknown method `{s}` (expected spn_max, spn_exact, empirical or gep<K>)"
                    ))
                }),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Numbers kept for studying the max-product approximation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    /// Max-product `log TPM(x, y=1)` at the chosen design.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_max_log: Option<f64>,
    /// Exact `log TPM(x, y=1)` at the chosen design.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_exact_log: Option<f64>,
    /// Log-denominator used by the constraint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub den_log: Option<f64>,
    /// Exact `P(y=1 | x)` at the chosen design.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_conditional: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator: Option<DenominatorMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_status: Option<SolveStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_count: Option<usize>,
    /// Scenarios drawn by a GEP baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub method: Method,
    pub feasible: bool,
    pub epsilon: f64,
    pub design: Option<DesignConfig>,
    pub invest_cost: Option<f64>,
    /// The method's own estimate of `P(y=1 | design)`.
    pub model_shortfall_estimate: Option<f64>,
    /// Filled in by callers that audit the design.
    pub oracle_shortfall: Option<crate::sim::OracleEstimate>,
    pub diagnostics: PlanDiagnostics,
}

impl PlanResult {
    fn infeasible(method: Method, epsilon: f64, diagnostics: PlanDiagnostics) -> Self {
        Self {
            method,
            feasible: false,
            epsilon,
            design: None,
            invest_cost: None,
            model_shortfall_estimate: None,
            oracle_shortfall: None,
            diagnostics,
        }
    }

    fn chosen(
        method: Method,
        epsilon: f64,
        grid: &DesignGrid,
        costs: &CostModel,
        (pv, bat): (usize, usize),
        estimate: Option<f64>,
        diagnostics: PlanDiagnostics,
    ) -> Self {
        Self {
            method,
            feasible: true,
            epsilon,
            design: Some(grid.design(pv, bat)),
            invest_cost: Some(costs.cost(pv, bat)),
            model_shortfall_estimate: estimate,
            oracle_shortfall: None,
            diagnostics,
        }
    }

    pub fn units(&self) -> Option<(usize, usize)> {
        self.design.as_ref().map(DesignConfig::units)
    }
}

/// Grid designs ordered by the shared tie-break.
pub fn ranked_designs(grid: &DesignGrid, costs: &CostModel) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = grid.designs().map(|d| d.units()).collect();
    cells.sort_by(|&a, &b| compare_designs(costs, a, b));
    cells
}

fn compare_designs(costs: &CostModel, a: (usize, usize), b: (usize, usize)) -> Ordering {
    let (ca, cb) = (costs.cost(a.0, a.1), costs.cost(b.0, b.1));
    if (ca - cb).abs() > COST_TIE {
        return ca.total_cmp(&cb);
    }
    (a.0 + a.1, a).cmp(&(b.0 + b.1, b))
}

/// How the planner treats `TPM(x)` in the chance constraint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorChoice {
    /// Second max-product copy of the circuit. Conservative in practice:
    /// both terms are under-estimated and the errors largely cancel.
    #[default]
    Circuit,
    /// Constant `1 / |grid|`; only valid for a uniform design sampler, and
    /// optimistic because the max-product numerator is a lower bound.
    UniformPrior,
}

impl DenominatorChoice {
    pub fn resolve(self, sampler: &DesignSampler, grid: &DesignGrid) -> Result<DenominatorMode> {
        match self {
            DenominatorChoice::Circuit => Ok(DenominatorMode::Circuit),
            DenominatorChoice::UniformPrior if sampler.is_uniform() => {
                Ok(DenominatorMode::UniformPrior { cells: grid.len() })
            }
            DenominatorChoice::UniformPrior => Err(Error::NonUniformPrior),
        }
    }
}

/// Circuit variable indices of the two design counts and the label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DesignVariables {
    pub pv: usize,
    pub battery: usize,
    pub label: usize,
}

impl DesignVariables {
    /// Looks the variables up by name and checks them against `grid`.
    pub fn resolve(circuit: &Circuit, grid: &DesignGrid) -> Result<Self> {
        let find = |name: &str, card: usize| -> Result<usize> {
            let v = circuit
                .variable_by_name(name)
                .ok_or_else(|| Error::InvalidModel(format!("circuit has no variable `{name}`")))?;
            match v.cardinality() {
                Some(c) if c == card => Ok(v.id),
                _ => Err(Error::InvalidModel(format!(
                    "variable `{name}` must be discrete with {card} levels"
                ))),
            }
        };
        Ok(Self {
            pv: find("pv_units", grid.pv_levels())?,
            battery: find("battery_units", grid.battery_levels())?,
            label: find("y", 2)?,
        })
    }

    fn given(&self, circuit: &Circuit, pv: usize, bat: usize) -> Evidence {
        Evidence::marginal(circuit.variables().len())
            .with_category(self.pv, pv)
            .with_category(self.battery, bat)
    }

    fn target(&self, circuit: &Circuit) -> Evidence {
        Evidence::marginal(circuit.variables().len()).with_category(self.label, 1)
    }
}

/// Per-cell circuit estimates of `P(y=1 | x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub pv_units: usize,
    pub battery_units: usize,
    /// Exact inference.
    pub exact: f64,
    /// `exp(max-product numerator − denominator)` under the given mode.
    pub max: f64,
    pub num_max_log: f64,
    pub num_exact_log: f64,
    pub den_log: f64,
}

fn cell_estimate(
    circuit: &Circuit,
    vars: DesignVariables,
    (pv, bat): (usize, usize),
    mode: DenominatorMode,
) -> Result<CellEstimate> {
    let given = vars.given(circuit, pv, bat);
    let joint = vars.target(circuit).union(&given)?;
    let num_exact_log = circuit.evaluate_exact(&joint)?;
    let num_max_log = circuit.evaluate_max(&joint)?.log_value;
    let den_exact = circuit.evaluate_exact(&given)?;
    if den_exact == f64::NEG_INFINITY {
        return Err(Error::UndefinedConditional);
    }
    let den_log = match mode {
        DenominatorMode::Circuit => circuit.evaluate_max(&given)?.log_value,
        DenominatorMode::UniformPrior { cells } => -(cells as f64).ln(),
    };
    Ok(CellEstimate {
        pv_units: pv,
        battery_units: bat,
        exact: (num_exact_log - den_exact).exp().min(1.0),
        max: (num_max_log - den_log).exp(),
        num_max_log,
        num_exact_log,
        den_log,
    })
}

/// [`CellEstimate`] for every grid cell in grid index order.
pub fn spn_landscape(
    circuit: &Circuit,
    grid: &DesignGrid,
    mode: DenominatorMode,
) -> Result<Vec<CellEstimate>> {
    let vars = DesignVariables::resolve(circuit, grid)?;
    let cells: Vec<(usize, usize)> = grid.designs().map(|d| d.units()).collect();
    cells
        .par_iter()
        .map(|&c| cell_estimate(circuit, vars, c, mode))
        .collect()
}

/// Chance program for the planner: indicators over the whole grid,
/// investment costs as objective.
pub fn build_program(
    circuit: &Circuit,
    costs: &CostModel,
    epsilon: f64,
    grid: &DesignGrid,
    mode: DenominatorMode,
) -> Result<ChanceProgram> {
    costs.validate()?;
    let vars = DesignVariables::resolve(circuit, grid)?;
    let domain = BTreeMap::from([
        (vars.pv, (0..grid.pv_levels()).collect::<Vec<_>>()),
        (vars.battery, (0..grid.battery_levels()).collect()),
    ]);
    let n = circuit.variables().len();
    let mut program = ChanceProgram::build(
        circuit,
        &domain,
        &vars.target(circuit),
        &Evidence::marginal(n),
        epsilon,
        mode,
    )?;
    program.set_costs(&BTreeMap::from([
        (
            vars.pv,
            (0..grid.pv_levels()).map(|k| costs.cost(k, 0)).collect(),
        ),
        (
            vars.battery,
            (0..grid.battery_levels())
                .map(|k| costs.cost(0, k))
                .collect(),
        ),
    ]))?;
    Ok(program)
}

/// MILP planner over the max-product circuit encoding.
pub fn plan_spn_max(
    circuit: &Circuit,
    costs: &CostModel,
    epsilon: f64,
    grid: &DesignGrid,
    mode: DenominatorMode,
    limits: &SolveLimits,
) -> Result<PlanResult> {
    let vars = DesignVariables::resolve(circuit, grid)?;
    let program = build_program(circuit, costs, epsilon, grid, mode)?;
    let sol = solve(&program, limits)?;
    let mut diag = PlanDiagnostics {
        denominator: Some(mode),
        solve_status: Some(sol.status),
        node_count: Some(sol.node_count),
        ..PlanDiagnostics::default()
    };
    let Some(design) = sol.design else {
        return Ok(PlanResult::infeasible(Method::SpnMax, epsilon, diag));
    };
    // Design categories come back in ascending variable order.
    let (pv, bat) = if vars.pv < vars.battery {
        (design[0], design[1])
    } else {
        (design[1], design[0])
    };
    let cell = cell_estimate(circuit, vars, (pv, bat), mode)?;
    diag.num_max_log = Some(cell.num_max_log);
    diag.num_exact_log = Some(cell.num_exact_log);
    diag.den_log = Some(cell.den_log);
    diag.exact_conditional = Some(cell.exact);
    Ok(PlanResult::chosen(
        Method::SpnMax,
        epsilon,
        grid,
        costs,
        (pv, bat),
        Some(cell.max),
        diag,
    ))
}

/// Reference planner: exact `P(y=1 | x)` for every cell.
pub fn plan_spn_exact(
    circuit: &Circuit,
    costs: &CostModel,
    epsilon: f64,
    grid: &DesignGrid,
) -> Result<PlanResult> {
    costs.validate()?;
    log_epsilon(epsilon)?;
    let vars = DesignVariables::resolve(circuit, grid)?;
    let ranked = ranked_designs(grid, costs);
    let target = vars.target(circuit);
    let probs: Vec<f64> = ranked
        .par_iter()
        .map(|&(pv, bat)| circuit.conditional_probability(&target, &vars.given(circuit, pv, bat)))
        .collect::<Result<_>>()?;
    let diag = PlanDiagnostics::default();
    Ok(
        match ranked.iter().zip(&probs).find(|(_, &p)| p <= epsilon) {
            Some((&cell, &p)) => {
                PlanResult::chosen(Method::SpnExact, epsilon, grid, costs, cell, Some(p), diag)
            }
            None => PlanResult::infeasible(Method::SpnExact, epsilon, diag),
        },
    )
}

/// Cheapest cell whose observed shortfall ratio is at most `epsilon`, using
/// only cells with at least `min_support` rows.
pub fn plan_empirical(
    data: &Dataset,
    costs: &CostModel,
    epsilon: f64,
    min_support: usize,
) -> Result<PlanResult> {
    costs.validate()?;
    log_epsilon(epsilon)?;
    let grid = data.grid();
    let table = data.empirical_table();
    let hit = ranked_designs(grid, costs)
        .into_iter()
        .find_map(|(pv, bat)| {
            table[grid.index(pv, bat)]
                .filter(|e| e.support >= min_support && e.ratio <= epsilon)
                .map(|e| ((pv, bat), e.ratio))
        });
    let diag = PlanDiagnostics::default();
    Ok(match hit {
        Some((cell, ratio)) => PlanResult::chosen(
            Method::Empirical,
            epsilon,
            grid,
            costs,
            cell,
            Some(ratio),
            diag,
        ),
        None => PlanResult::infeasible(Method::Empirical, epsilon, diag),
    })
}

/// `k` fresh scenario days for a GEP baseline, determined by `seed`.
pub fn gep_scenarios(k: usize, seed: u64, env: &EnvParams) -> Vec<EnvScenario> {
    (0..k as u64)
        .into_par_iter()
        .map(|i| sample_environment(&mut row_rng(seed, GEP_STREAM + i, 1), env))
        .collect()
}

/// Cheapest design with no shortfall on any of `scenarios`.
pub fn plan_gep(
    scenarios: &[EnvScenario],
    costs: &CostModel,
    epsilon: f64,
    grid: &DesignGrid,
    sim: &SimParams,
) -> Result<PlanResult> {
    costs.validate()?;
    if scenarios.is_empty() {
        return Err(Error::InvalidParameter(
            "GEP needs at least one scenario".into(),
        ));
    }
    let method = Method::Gep(scenarios.len());
    let diag = PlanDiagnostics {
        scenarios: Some(scenarios.len()),
        ..PlanDiagnostics::default()
    };
    let hit = ranked_designs(grid, costs).into_iter().find(|&(pv, bat)| {
        let d = grid.design(pv, bat);
        !scenarios.iter().any(|s| shortfall_label(&d, s, sim))
    });
    Ok(match hit {
        Some(cell) => PlanResult::chosen(method, epsilon, grid, costs, cell, Some(0.0), diag),
        None => PlanResult::infeasible(method, epsilon, diag),
    })
}

/// [`gep_scenarios`] followed by [`plan_gep`].
pub fn plan_gep_k(
    k: usize,
    seed: u64,
    costs: &CostModel,
    epsilon: f64,
    grid: &DesignGrid,
    env: &EnvParams,
    sim: &SimParams,
) -> Result<PlanResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("GEP needs K >= 1".into()));
    }
    plan_gep(&gep_scenarios(k, seed, env), costs, epsilon, grid, sim)
}
