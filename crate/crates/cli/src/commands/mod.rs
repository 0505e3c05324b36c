//! Subcommand implementations and the pipeline stages they share.

mod scaling;
mod single;
mod sweep;

pub use scaling::scaling;
pub use single::{export_lp, generate, landscape, plan, train};
pub use sweep::{sweep, SWEEP_HEADER};

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context as _};
use serde::Serialize;
use spnplan_core::circuit::Circuit;
use spnplan_core::learn::{grid_search_with_summary, CandidateSummary, LearnParams, TrainedModel};
use spnplan_core::planner::{
    plan_empirical, plan_gep_k, plan_spn_exact, plan_spn_max, spn_landscape, Method, PlanResult,
};
use spnplan_core::sim::{generate_dataset, Dataset};

use crate::artifacts::{num, opt, TRAIN_REPORT_SCHEMA};
use crate::{seeds, split, CliResult, ExperimentConfig};

/// Resolved configuration plus the output directory.
pub struct Context {
    pub config: ExperimentConfig,
    pub out: PathBuf,
}

impl Context {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub schema: &'static str,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_valid: usize,
    /// Too few rows to hold any out; selection used the training rows.
    pub validated_on_training_rows: bool,
    pub prevalence: f64,
    pub split_seed: u64,
    pub learn_seed: u64,
    pub chosen: LearnParams,
    pub circuit_nodes: usize,
    pub train_loglik: f64,
    pub valid_loglik: Option<f64>,
    pub candidates: Vec<CandidateSummary>,
    pub train_seconds: f64,
}

/// Stratified split followed by grid search.
pub fn fit(
    data: &Dataset,
    config: &ExperimentConfig,
    split_seed: u64,
    learn_seed: u64,
) -> anyhow::Result<(TrainedModel, TrainReport)> {
    let start = Instant::now();
    if data.is_empty() {
        return Err(anyhow!("cannot train on an empty dataset"));
    }
    let labels: Vec<bool> = data.rows.iter().map(|r| r.shortfall).collect();
    let (train_rows, valid_rows) =
        split::stratified(&labels, config.learn.validation_fraction, split_seed);
    let train = data.subset(&train_rows);
    let variables = train.variables();
    let train_m = train.to_matrix_with(variables.clone())?;
    let valid_m = if valid_rows.is_empty() {
        train_m.clone()
    } else {
        data.subset(&valid_rows).to_matrix_with(variables)?
    };
    let (model, candidates) =
        grid_search_with_summary(&train_m, &valid_m, &config.learn_grid(learn_seed))?;
    let report = TrainReport {
        schema: TRAIN_REPORT_SCHEMA,
        n_rows: data.len(),
        n_train: train_rows.len(),
        n_valid: valid_rows.len(),
        validated_on_training_rows: valid_rows.is_empty(),
        prevalence: data.prevalence(),
        split_seed,
        learn_seed,
        chosen: model.params.clone(),
        circuit_nodes: model.circuit.len(),
        train_loglik: model.train_loglik,
        valid_loglik: model.valid_loglik,
        candidates,
        train_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

/// What a planner may draw on.
pub struct PlanInputs<'a> {
    pub config: &'a ExperimentConfig,
    pub circuit: Option<&'a Circuit>,
    pub data: Option<&'a Dataset>,
    pub gep_seed: u64,
}

pub fn run_method(method: Method, inputs: &PlanInputs) -> anyhow::Result<PlanResult> {
    let c = inputs.config;
    let grid = &c.simulation.grid;
    let need_circuit = || {
        inputs
            .circuit
            .ok_or_else(|| anyhow!("{method} needs a trained model"))
    };
    Ok(match method {
        Method::SpnMax => {
            let mode = c.planner.denominator.resolve(&c.simulation.sampler, grid)?;
            plan_spn_max(
                need_circuit()?,
                &c.costs,
                c.epsilon,
                grid,
                mode,
                &c.planner.limits(),
            )?
        }
        Method::SpnExact => plan_spn_exact(need_circuit()?, &c.costs, c.epsilon, grid)?,
        Method::Empirical => {
            let data = inputs
                .data
                .ok_or_else(|| anyhow!("empirical needs a dataset"))?;
            if data.is_empty() {
                return Err(anyhow!("empirical needs at least one row"));
            }
            plan_empirical(data, &c.costs, c.epsilon, c.planner.min_support)?
        }
        Method::Gep(k) => plan_gep_k(
            k,
            inputs.gep_seed,
            &c.costs,
            c.epsilon,
            grid,
            &c.simulation.env,
            &c.simulation.sim,
        )?,
    })
}

pub const LANDSCAPE_HEADER: [&str; 6] = [
    "data_fraction",
    "pv_units",
    "battery_units",
    "method",
    "estimate",
    "support",
];

/// Per-cell shortfall estimates: exact and max-product circuit values when a
/// circuit is given, and observed ratios from `data`.
pub fn landscape_rows(
    fraction: f64,
    circuit: Option<&Circuit>,
    data: &Dataset,
    config: &ExperimentConfig,
) -> anyhow::Result<Vec<Vec<String>>> {
    let grid = &config.simulation.grid;
    let cell = |pv: usize, bat: usize, method: &str, estimate: String, support: String| {
        vec![
            num(fraction),
            pv.to_string(),
            bat.to_string(),
            method.to_string(),
            estimate,
            support,
        ]
    };
    let mut rows = Vec::new();
    if let Some(circuit) = circuit {
        let mode = config
            .planner
            .denominator
            .resolve(&config.simulation.sampler, grid)?;
        let cells = spn_landscape(circuit, grid, mode)?;
        for e in &cells {
            rows.push(cell(
                e.pv_units,
                e.battery_units,
                "spn_exact",
                num(e.exact),
                String::new(),
            ));
        }
        for e in &cells {
            rows.push(cell(
                e.pv_units,
                e.battery_units,
                "spn_max",
                num(e.max),
                String::new(),
            ));
        }
    }
    let table = data.empirical_table();
    for d in grid.designs() {
        let (pv, bat) = d.units();
        let e = table.get(grid.index(pv, bat)).copied().flatten();
        rows.push(cell(
            pv,
            bat,
            "empirical",
            opt(e.map(|e| e.ratio)),
            e.map_or(0, |e| e.support).to_string(),
        ));
    }
    Ok(rows)
}

pub fn master_dataset(config: &ExperimentConfig) -> anyhow::Result<Dataset> {
    Ok(generate_dataset(
        config.dataset_size,
        seeds::dataset(config.master_seed),
        &config.simulation,
    )?)
}

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    if !path.exists() {
        return Err(crate::CliError::Usage(format!(
            "dataset {} does not exist (run `spnplan generate` first)",
            path.display()
        )));
    }
    Ok(Dataset::read_csv(path).with_context(|| format!("reading {}", path.display()))?)
}

pub fn read_model(path: &Path) -> CliResult<Circuit> {
    if !path.exists() {
        return Err(crate::CliError::Usage(format!(
            "model {} does not exist (run `spnplan train` first)",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path)?;
    Ok(spnplan_core::circuit::from_json(&text)
        .with_context(|| format!("reading {}", path.display()))?)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
