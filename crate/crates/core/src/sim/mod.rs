//! Scenario simulator: stochastic days, PV + battery dispatch, labelled
//! datasets and Monte-Carlo ground truth.

mod dataset;
mod design;
mod dispatch;
mod env;
mod oracle;

pub use dataset::{
    generate_dataset, row_rng, scenario_for_row, sidecar_path, Dataset, DatasetMeta, DatasetRow,
    EmpiricalShortfall, SimConfig, CSV_HEADER, DATASET_SCHEMA,
};
pub use design::{DesignConfig, DesignGrid, DesignSampler};
pub use dispatch::{
    outcome, shortfall_label, simulate, simulate_trace, DispatchTrace, SimOutcome, SimParams,
};
pub use env::{sample_environment, EnvParams, EnvScenario, LoadShape, FEATURE_NAMES};
pub use oracle::{ground_truth_oracle, oracle_grid, OracleEstimate};
