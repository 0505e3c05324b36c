//! Solve-time scaling: SPN-Max against training-set size, GEP against the
//! number of scenarios.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use spnplan_core::learn::LearnParams;
use spnplan_core::planner::{plan_gep_k, plan_spn_max, PlanResult};

use super::{fit, master_dataset, median, Context};
use crate::artifacts::{csv_table, num, opt, write_atomic, SCALING_SCHEMA};
use crate::seeds::{self, Stage};
use crate::CliResult;

const HEADER: [&str; 10] = [
    "method",
    "n_rows",
    "scenarios",
    "runs",
    "min_instances",
    "circuit_nodes",
    "cost",
    "train_seconds",
    "median_solve_seconds",
    "max_solve_seconds",
];

/// Shortest wall time of one solve sample; fast solves are repeated.
const MIN_SAMPLE: Duration = Duration::from_millis(200);

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Seconds per call, averaged over as many calls as fit in [`MIN_SAMPLE`].
fn per_call<T>(mut f: impl FnMut() -> T) -> (T, f64) {
    let start = Instant::now();
    let mut calls = 0u32;
    loop {
        let out = f();
        calls += 1;
        let elapsed = start.elapsed();
        if elapsed >= MIN_SAMPLE {
            return (out, elapsed.as_secs_f64() / calls as f64);
        }
    }
}

pub fn scaling(ctx: &Context) -> CliResult<()> {
    let c = &ctx.config;
    let s = &c.scaling;
    let grid = &c.simulation.grid;
    let mut sized = c.clone();
    sized.dataset_size = *s.sizes.last().expect("validated non-empty");
    let master = master_dataset(&sized)?;
    let mode = c.planner.denominator.resolve(&c.simulation.sampler, grid)?;
    let mut rows = Vec::new();
    let mut medians: BTreeMap<&str, Vec<f64>> = BTreeMap::new();

    // Grid-selected models grow with the data; the fixed-budget ladder keeps
    // the smallest size's parameters and scales min_instances with N, so the
    // circuit (and hence the MILP) stays roughly the same size.
    let n0 = s.sizes[0];
    let mut base: Option<LearnParams> = None;
    let mut fitted_models = Vec::new();
    for &n in &s.sizes {
        // Rows are i.i.d., so a prefix is a uniform sample.
        let data = master.subset(&(0..n).collect::<Vec<_>>());
        let split_seed = seeds::derive(c.master_seed, Stage::Split, &[n as u64]);
        let learn_seed = seeds::derive(c.master_seed, Stage::Train, &[n as u64]);
        let (fitted, train_seconds) = timed(|| fit(&data, c, split_seed, learn_seed));
        let (model, _) = fitted?;
        let p0 = base.get_or_insert_with(|| model.params.clone()).clone();
        let mut ladders = vec![("spn_max", model, train_seconds)];
        if n != n0 {
            let mut fixed = c.clone();
            fixed.learn.grid = vec![LearnParams {
                min_instances: (p0.min_instances as f64 * n as f64 / n0 as f64).round() as usize,
                ..p0
            }];
            let (fitted, t) = timed(|| fit(&data, &fixed, split_seed, learn_seed));
            ladders.push(("spn_max_fixed_budget", fitted?.0, t));
        } else {
            let m = ladders[0].1.clone();
            ladders.push(("spn_max_fixed_budget", m, train_seconds));
        }
        fitted_models.extend(
            ladders
                .into_iter()
                .map(|(name, model, t)| (name, n, model, t)),
        );
    }

    // Runs go round-robin over every model so slow drift on the host shows up
    // in all sizes alike rather than skewing one end of the ladder.
    let mut times = vec![Vec::new(); fitted_models.len()];
    let mut results: Vec<Option<PlanResult>> = vec![None; fitted_models.len()];
    for _ in 0..s.runs {
        for (i, (_, _, model, _)) in fitted_models.iter().enumerate() {
            let (r, t) = per_call(|| {
                plan_spn_max(
                    &model.circuit,
                    &c.costs,
                    c.epsilon,
                    grid,
                    mode,
                    &c.planner.limits(),
                )
            });
            results[i] = Some(r?);
            times[i].push(t);
        }
    }
    for (i, (name, n, model, train_seconds)) in fitted_models.iter().enumerate() {
        let result = results[i].as_ref().expect("at least one run");
        let med = median(times[i].clone());
        medians.entry(name).or_default().push(med);
        eprintln!(
            "scaling: {name} n_rows={n} nodes={} median solve {med:.4}s",
            model.circuit.len()
        );
        rows.push(vec![
            name.to_string(),
            n.to_string(),
            String::new(),
            s.runs.to_string(),
            model.params.min_instances.to_string(),
            model.circuit.len().to_string(),
            opt(result.invest_cost),
            num(*train_seconds),
            num(med),
            num(times[i].iter().copied().fold(0.0, f64::max)),
        ]);
    }

    let mut gep_medians = Vec::new();
    for &k in &s.gep_ks {
        let mut times = Vec::new();
        let mut cost = None;
        for run in 0..s.runs {
            let seed = seeds::derive(c.master_seed, Stage::Gep, &[k as u64, run as u64]);
            let (r, t) = per_call(|| {
                plan_gep_k(
                    k,
                    seed,
                    &c.costs,
                    c.epsilon,
                    grid,
                    &c.simulation.env,
                    &c.simulation.sim,
                )
            });
            let r = r?;
            if run == 0 {
                cost = r.invest_cost;
            }
            times.push(t);
        }
        let med = median(times.clone());
        gep_medians.push(med);
        eprintln!("scaling: gep K={k} median solve {med:.4}s");
        rows.push(vec![
            format!("gep{k}"),
            String::new(),
            k.to_string(),
            s.runs.to_string(),
            String::new(),
            String::new(),
            opt(cost),
            String::new(),
            num(med),
            num(times.iter().copied().fold(0.0, f64::max)),
        ]);
    }

    let path = ctx.path("scaling.csv");
    write_atomic(&path, csv_table(SCALING_SCHEMA, &HEADER, &rows)?.as_bytes())?;
    for (name, m) in &medians {
        println!(
            "{name} solve time ratio (largest / smallest training set): {:.3}",
            m[m.len() - 1] / m[0]
        );
    }
    if let (Some(a), Some(b)) = (gep_medians.first(), gep_medians.last()) {
        println!(
            "gep solve time ratio (most / fewest scenarios): {:.3}",
            b / a
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
