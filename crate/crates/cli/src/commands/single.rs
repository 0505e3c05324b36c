//! One-shot commands: generate, train, plan, landscape, export-lp.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use spnplan_core::circuit::to_json;
use spnplan_core::milp::export_lp as lp_text;
use spnplan_core::planner::{build_program, Method, PlanResult};
use spnplan_core::sim::ground_truth_oracle;

use super::{
    fit, landscape_rows, master_dataset, read_dataset, read_model, run_method, Context, PlanInputs,
    LANDSCAPE_HEADER,
};
use crate::artifacts::{csv_table, write_atomic, write_json, LANDSCAPE_SCHEMA, PLAN_SCHEMA};
use crate::seeds::{self, Stage};
use crate::{CliError, CliResult};

pub fn generate(ctx: &Context) -> CliResult<()> {
    let data = master_dataset(&ctx.config)?;
    let path = ctx.path("dataset.csv");
    data.write_csv(&path)?;
    println!(
        "wrote {} rows to {} (shortfall prevalence {:.4})",
        data.len(),
        path.display(),
        data.prevalence()
    );
    Ok(())
}

pub fn train(ctx: &Context, data_path: &Path) -> CliResult<()> {
    let data = read_dataset(data_path)?;
    let master = ctx.config.master_seed;
    let (model, report) = fit(
        &data,
        &ctx.config,
        seeds::derive(master, Stage::Split, &[]),
        seeds::derive(master, Stage::Train, &[]),
    )?;
    let mut text = to_json(&model.circuit)?;
    text.push('\n');
    write_atomic(&ctx.path("model.json"), text.as_bytes())?;
    write_json(&ctx.path("train_report.json"), &report)?;
    println!(
        "trained on {} rows: {} nodes, validation log-likelihood {}",
        report.n_train,
        report.circuit_nodes,
        report
            .valid_loglik
            .map_or("n/a".into(), |v| format!("{v:.4}")),
    );
    Ok(())
}

#[derive(Serialize)]
struct PlanArtifact<'a> {
    schema: &'static str,
    master_seed: u64,
    oracle_seed: u64,
    #[serde(flatten)]
    result: &'a PlanResult,
    solve_seconds: f64,
}

pub fn plan(ctx: &Context, method: Method, model: &Path, data: &Path) -> CliResult<()> {
    let c = &ctx.config;
    let circuit = match method {
        Method::SpnMax | Method::SpnExact => Some(read_model(model)?),
        _ => None,
    };
    let dataset = match method {
        Method::Empirical => Some(read_dataset(data)?),
        _ => None,
    };
    let inputs = PlanInputs {
        config: c,
        circuit: circuit.as_ref(),
        data: dataset.as_ref(),
        gep_seed: seeds::derive(c.master_seed, Stage::Gep, &[]),
    };
    let start = Instant::now();
    let mut result = run_method(method, &inputs)?;
    let solve_seconds = start.elapsed().as_secs_f64();
    let oracle_seed = seeds::oracle(c.master_seed);
    if let Some(d) = &result.design {
        result.oracle_shortfall = Some(ground_truth_oracle(
            d,
            c.oracle.n_mc,
            oracle_seed,
            &c.simulation,
        ));
    }
    let path = ctx.path(&format!("plan_{method}.json"));
    write_json(
        &path,
        &PlanArtifact {
            schema: PLAN_SCHEMA,
            master_seed: c.master_seed,
            oracle_seed,
            result: &result,
            solve_seconds,
        },
    )?;
    match (&result.design, &result.oracle_shortfall) {
        (Some(d), Some(o)) => {
            println!(
                "{method}: pv_units={} battery_units={} cost={} model_estimate={} oracle={:.4}±{:.4} ({})",
                d.pv_units,
                d.battery_units,
                result.invest_cost.unwrap_or(f64::NAN),
                result.model_shortfall_estimate.map_or("n/a".into(), |p| format!("{p:.4}")),
                o.estimate,
                o.half_width,
                if o.passes(c.epsilon) { "pass" } else { "FAIL" },
            );
            Ok(())
        }
        _ => Err(CliError::Infeasible(format!(
            "{method} found no design with shortfall probability at most {} (wrote {})",
            c.epsilon,
            path.display()
        ))),
    }
}

pub fn landscape(ctx: &Context, model: &Path, data: &Path, fraction: f64) -> CliResult<()> {
    let circuit = read_model(model)?;
    let dataset = read_dataset(data)?;
    let rows = landscape_rows(fraction, Some(&circuit), &dataset, &ctx.config)?;
    let path = ctx.path("landscape.csv");
    write_atomic(
        &path,
        csv_table(LANDSCAPE_SCHEMA, &LANDSCAPE_HEADER, &rows)?.as_bytes(),
    )?;
    println!("wrote {} cells to {}", rows.len(), path.display());
    Ok(())
}

pub fn export_lp(ctx: &Context, model: &Path) -> CliResult<()> {
    let c = &ctx.config;
    let circuit = read_model(model)?;
    let mode = c
        .planner
        .denominator
        .resolve(&c.simulation.sampler, &c.simulation.grid)?;
    let program = build_program(&circuit, &c.costs, c.epsilon, &c.simulation.grid, mode)?;
    write_atomic(
        &ctx.path("chance_program.lp"),
        lp_text(&program.model).as_bytes(),
    )?;
    let mut dump = program.dump_json()?;
    dump.push('\n');
    write_atomic(&ctx.path("chance_program.json"), dump.as_bytes())?;
    println!(
        "wrote {} variables ({} binary) and {} constraints to {}",
        program.model.variables.len(),
        program.model.num_binaries(),
        program.model.constraints.len(),
        ctx.path("chance_program.lp").display()
    );
    Ok(())
}
