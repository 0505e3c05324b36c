//! Data-fraction × repetition sweep with resumable, append-only output.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::Context as _;
use rayon::prelude::*;
use spnplan_core::planner::{Method, PlanResult};
use spnplan_core::sim::{oracle_grid, Dataset, OracleEstimate};

use super::{
    fit, landscape_rows, master_dataset, run_method, Context, PlanInputs, LANDSCAPE_HEADER,
};
use crate::artifacts::{
    csv_records, csv_table, num, opt, read_table, write_atomic, write_json, LANDSCAPE_SCHEMA,
    ORACLE_GRID_SCHEMA, SWEEP_SCHEMA,
};
use crate::seeds::{self, Stage};
use crate::{CliError, CliResult, ExperimentConfig};

pub const SWEEP_HEADER: [&str; 19] = [
    "data_fraction",
    "repetition",
    "seed",
    "method",
    "status",
    "n_rows",
    "feasible",
    "pv_units",
    "battery_units",
    "cost",
    "model_estimate",
    "exact_conditional",
    "oracle_estimate",
    "oracle_half_width",
    "oracle_pass",
    "error",
    "train_seconds",
    "solve_seconds",
    "node_count",
];

const ORACLE_HEADER: [&str; 6] = [
    "pv_units",
    "battery_units",
    "cost",
    "estimate",
    "half_width",
    "n_mc",
];

#[derive(Clone, Copy, Debug)]
struct Unit {
    fraction: f64,
    rep: usize,
}

/// The part of the configuration that determines sweep results; a resumed
/// sweep must match it exactly.
fn result_key(config: &ExperimentConfig) -> ExperimentConfig {
    let mut key = config.clone();
    key.sweep = Default::default();
    key.scaling = Default::default();
    key
}

pub fn sweep(ctx: &Context, fresh: bool) -> CliResult<()> {
    let c = &ctx.config;
    let sweep_path = ctx.path("sweep.csv");
    let landscape_path = ctx.path("landscape_sweep.csv");
    let key_path = ctx.path("sweep.config.json");
    std::fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;

    if fresh {
        for p in [&sweep_path, &landscape_path, &key_path] {
            if p.exists() {
                std::fs::remove_file(p)?;
            }
        }
    }
    let key = result_key(c);
    let done = if sweep_path.exists() {
        let stored: Option<ExperimentConfig> = std::fs::read_to_string(&key_path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
        if stored.as_ref() != Some(&key) {
            return Err(CliError::Usage(format!(
                "{} was produced with a different configuration; rerun with --fresh to discard it",
                sweep_path.display()
            )));
        }
        // Rewriting drops any record cut short by an interrupted run, so
        // appends below start on a fresh line.
        canonicalize_sweep(&sweep_path, c)?;
        if landscape_path.exists() {
            canonicalize_landscape(&landscape_path)?;
        } else {
            write_atomic(
                &landscape_path,
                csv_table(LANDSCAPE_SCHEMA, &LANDSCAPE_HEADER, &[])?.as_bytes(),
            )?;
        }
        completed_units(&sweep_path, &c.planner.methods)?
    } else {
        write_atomic(
            &sweep_path,
            csv_table(SWEEP_SCHEMA, &SWEEP_HEADER, &[])?.as_bytes(),
        )?;
        write_atomic(
            &landscape_path,
            csv_table(LANDSCAPE_SCHEMA, &LANDSCAPE_HEADER, &[])?.as_bytes(),
        )?;
        write_json(&key_path, &key)?;
        BTreeSet::new()
    };

    let master = master_dataset(c)?;
    let oracle = oracle_grid(c.oracle.n_mc, seeds::oracle(c.master_seed), &c.simulation);
    write_oracle_grid(&ctx.path("oracle_grid.csv"), c, &oracle)?;

    let pending: Vec<Unit> = c
        .data_fractions
        .iter()
        .flat_map(|&fraction| (0..c.repetitions).map(move |rep| Unit { fraction, rep }))
        .filter(|u| !done.contains(&(u.fraction.to_bits(), u.rep)))
        .collect();
    let total = c.data_fractions.len() * c.repetitions;
    eprintln!("sweep: {} of {total} repetitions to run", pending.len());

    let sink = Mutex::new(());
    let finished = AtomicUsize::new(total - pending.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(c.sweep.workers)
        .build()?;
    pool.install(|| {
        pending
            .par_iter()
            .try_for_each(|&unit| -> anyhow::Result<()> {
                let (rows, landscape) = run_unit(c, &master, &oracle, unit);
                let _guard = sink.lock().unwrap_or_else(|e| e.into_inner());
                // Landscape first: a unit counts as done once its sweep rows land.
                append(&landscape_path, &csv_records(&landscape)?)?;
                append(&sweep_path, &csv_records(&rows)?)?;
                let n = finished.fetch_add(1, Ordering::Relaxed) + 1;
                eprintln!(
                    "sweep: fraction {} repetition {} done ({n}/{total})",
                    unit.fraction, unit.rep
                );
                Ok(())
            })
    })?;

    canonicalize_sweep(&sweep_path, c)?;
    canonicalize_landscape(&landscape_path)?;
    summarize(&sweep_path)?;
    Ok(())
}

fn append(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut f = OpenOptions::new()
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    f.sync_data()?;
    Ok(())
}

fn completed_units(path: &Path, methods: &[Method]) -> anyhow::Result<BTreeSet<(u64, usize)>> {
    let (_, rows) = read_table(path)?;
    let mut seen: BTreeMap<(u64, usize), BTreeSet<String>> = BTreeMap::new();
    for r in rows {
        if let (Ok(f), Ok(rep)) = (r[0].parse::<f64>(), r[1].parse::<usize>()) {
            seen.entry((f.to_bits(), rep))
                .or_default()
                .insert(r[3].clone());
        }
    }
    let want: BTreeSet<String> = methods.iter().map(Method::to_string).collect();
    Ok(seen
        .into_iter()
        .filter(|(_, m)| *m == want)
        .map(|(k, _)| k)
        .collect())
}

fn write_oracle_grid(
    path: &Path,
    c: &ExperimentConfig,
    oracle: &[OracleEstimate],
) -> anyhow::Result<()> {
    let rows: Vec<Vec<String>> = c
        .simulation
        .grid
        .designs()
        .zip(oracle)
        .map(|(d, o)| {
            vec![
                d.pv_units.to_string(),
                d.battery_units.to_string(),
                num(c.costs.cost(d.pv_units, d.battery_units)),
                num(o.estimate),
                num(o.half_width),
                o.n_mc.to_string(),
            ]
        })
        .collect();
    write_atomic(
        path,
        csv_table(ORACLE_GRID_SCHEMA, &ORACLE_HEADER, &rows)?.as_bytes(),
    )
}

/// Trains, plans with every configured method and audits one repetition.
/// Stage failures become `failed` rows instead of errors.
fn run_unit(
    c: &ExperimentConfig,
    master: &Dataset,
    oracle: &[OracleEstimate],
    unit: Unit,
) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let sub_seed = seeds::unit(c.master_seed, Stage::Subsample, unit.fraction, unit.rep);
    let rows = crate::split::subsample(master.len(), unit.fraction, sub_seed);
    let data = master.subset(&rows);

    let needs_model = c
        .planner
        .methods
        .iter()
        .any(|m| matches!(m, Method::SpnMax | Method::SpnExact));
    let mut train_seconds = None;
    let model = needs_model.then(|| {
        let start = Instant::now();
        let fitted = fit(
            &data,
            c,
            seeds::unit(c.master_seed, Stage::Split, unit.fraction, unit.rep),
            seeds::unit(c.master_seed, Stage::Train, unit.fraction, unit.rep),
        );
        train_seconds = Some(start.elapsed().as_secs_f64());
        fitted.map(|(m, _)| m)
    });
    let circuit = match &model {
        Some(Ok(m)) => Some(&m.circuit),
        _ => None,
    };
    let inputs = PlanInputs {
        config: c,
        circuit,
        data: Some(&data),
        gep_seed: seeds::unit(c.master_seed, Stage::Gep, unit.fraction, unit.rep),
    };

    let base = |method: Method| {
        vec![
            num(unit.fraction),
            unit.rep.to_string(),
            sub_seed.to_string(),
            method.to_string(),
            String::new(),
            data.len().to_string(),
        ]
    };
    let failed = |method: Method, msg: String, train: Option<f64>| {
        let mut r = base(method);
        r[4] = "failed".into();
        r.extend([
            "false".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
        r.extend([
            String::new(),
            String::new(),
            String::new(),
            msg,
            opt(train),
            String::new(),
            String::new(),
        ]);
        r
    };

    let mut out = Vec::new();
    for &method in &c.planner.methods {
        let is_spn = matches!(method, Method::SpnMax | Method::SpnExact);
        let train = if is_spn { train_seconds } else { None };
        if let (true, Some(Err(e))) = (is_spn, &model) {
            out.push(failed(method, format!("training failed: {e:#}"), train));
            continue;
        }
        if data.is_empty() && method == Method::Empirical {
            out.push(failed(method, "empty subsample".into(), None));
            continue;
        }
        let start = Instant::now();
        match run_method(method, &inputs) {
            Ok(res) => out.push(result_row(
                base(method),
                &res,
                c,
                oracle,
                train,
                start.elapsed().as_secs_f64(),
            )),
            Err(e) => out.push(failed(method, format!("{e:#}"), train)),
        }
    }

    let landscape = if unit.rep == 0 {
        landscape_rows(unit.fraction, circuit, &data, c).unwrap_or_default()
    } else {
        Vec::new()
    };
    (out, landscape)
}

fn result_row(
    mut row: Vec<String>,
    res: &PlanResult,
    c: &ExperimentConfig,
    oracle: &[OracleEstimate],
    train_seconds: Option<f64>,
    solve_seconds: f64,
) -> Vec<String> {
    let grid = &c.simulation.grid;
    let audit = res.units().map(|(pv, bat)| oracle[grid.index(pv, bat)]);
    row[4] = if res.feasible { "ok" } else { "infeasible" }.into();
    row.extend([
        res.feasible.to_string(),
        opt(res.units().map(|u| u.0)),
        opt(res.units().map(|u| u.1)),
        opt(res.invest_cost),
        opt(res.model_shortfall_estimate),
        opt(res.diagnostics.exact_conditional),
        opt(audit.map(|o| o.estimate)),
        opt(audit.map(|o| o.half_width)),
        opt(audit.map(|o| o.passes(c.epsilon))),
        String::new(),
        opt(train_seconds),
        num(solve_seconds),
        opt(res.diagnostics.node_count),
    ]);
    row
}

/// Rewrites the sweep table in (fraction, repetition, method) order, keeping
/// the last copy of any duplicated row.
fn canonicalize_sweep(path: &Path, c: &ExperimentConfig) -> anyhow::Result<()> {
    let (header, rows) = read_table(path)?;
    anyhow::ensure!(
        header == SWEEP_HEADER,
        "{} has an unexpected header",
        path.display()
    );
    let method_rank = |m: &str| {
        c.planner
            .methods
            .iter()
            .position(|x| x.to_string() == m)
            .unwrap_or(usize::MAX)
    };
    let mut keyed: BTreeMap<(u64, usize, usize), Vec<String>> = BTreeMap::new();
    for r in rows {
        let f: f64 = r[0].parse()?;
        keyed.insert((f.to_bits(), r[1].parse()?, method_rank(&r[3])), r);
    }
    let rows: Vec<Vec<String>> = keyed.into_values().collect();
    write_atomic(
        path,
        csv_table(SWEEP_SCHEMA, &SWEEP_HEADER, &rows)?.as_bytes(),
    )
}

fn canonicalize_landscape(path: &Path) -> anyhow::Result<()> {
    let (header, rows) = read_table(path)?;
    anyhow::ensure!(
        header == LANDSCAPE_HEADER,
        "{} has an unexpected header",
        path.display()
    );
    let mut keyed: BTreeMap<(u64, String, usize, usize), Vec<String>> = BTreeMap::new();
    for r in rows {
        let f: f64 = r[0].parse()?;
        keyed.insert((f.to_bits(), r[3].clone(), r[1].parse()?, r[2].parse()?), r);
    }
    let rows: Vec<Vec<String>> = keyed.into_values().collect();
    write_atomic(
        path,
        csv_table(LANDSCAPE_SCHEMA, &LANDSCAPE_HEADER, &rows)?.as_bytes(),
    )
}

/// Per-method pass counts on stdout.
fn summarize(path: &Path) -> anyhow::Result<()> {
    let (_, rows) = read_table(path)?;
    let mut by_method: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for r in &rows {
        let e = by_method.entry(r[3].clone()).or_default();
        e.0 += 1;
        e.1 += (r[4] == "ok") as usize;
        e.2 += (r[14] == "true") as usize;
    }
    for (m, (n, ok, pass)) in by_method {
        println!("{m}: {n} runs, {ok} feasible, {pass} within the oracle bound");
    }
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}
