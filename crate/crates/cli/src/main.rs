use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spnplan_cli::commands::{self, Context};
use spnplan_cli::{CliResult, ExperimentConfig};
use spnplan_core::planner::Method;

/// Chance-constrained PV + battery planning with a learned circuit.
#[derive(Parser)]
#[command(name = "spnplan", version)]
struct Cli {
    /// TOML or JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `epsilon`.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the labelled dataset (dataset.csv and its sidecar).
    Generate,
    /// Learn a circuit by grid search (model.json, train_report.json).
    Train {
        #[arg(long, default_value = "out/dataset.csv")]
        data: PathBuf,
    },
    /// Choose the cheapest design and audit it (plan_<method>.json).
    Plan {
        /// spn_max, spn_exact, empirical or gep<K>.
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long, default_value = "out/model.json")]
        model: PathBuf,
        #[arg(long, default_value = "out/dataset.csv")]
        data: PathBuf,
    },
    /// Per-design shortfall estimates (landscape.csv).
    Landscape {
        #[arg(long, default_value = "out/model.json")]
        model: PathBuf,
        #[arg(long, default_value = "out/dataset.csv")]
        data: PathBuf,
        /// Value written to the data_fraction column.
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
    },
    /// Data-fraction × repetition experiment (sweep.csv and friends).
    Sweep {
        /// Discard earlier output instead of resuming.
        #[arg(long)]
        fresh: bool,
    },
    /// Solve-time scaling experiment (scaling.csv).
    Scaling,
    /// Write the chance program for a model as an LP file and JSON dump.
    ExportLp {
        #[arg(long, default_value = "out/model.json")]
        model: PathBuf,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: spnplan_core::Error| e.to_string())
}

fn run(cli: Cli) -> CliResult<()> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.master_seed = s;
    }
    if let Some(e) = cli.epsilon {
        config.epsilon = e;
    }
    config.validate()?;
    let ctx = Context {
        config,
        out: cli.out,
    };
    match cli.command {
        Command::Generate => commands::generate(&ctx),
        Command::Train { data } => commands::train(&ctx, &data),
        Command::Plan {
            method,
            model,
            data,
        } => commands::plan(&ctx, method, &model, &data),
        Command::Landscape {
            model,
            data,
            fraction,
        } => commands::landscape(&ctx, &model, &data, fraction),
        Command::Sweep { fresh } => commands::sweep(&ctx, fresh),
        Command::Scaling => commands::scaling(&ctx),
        Command::ExportLp { model } => commands::export_lp(&ctx, &model),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spnplan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
