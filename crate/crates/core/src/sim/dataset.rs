use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{DesignConfig, DesignGrid, DesignSampler};
use super::dispatch::{simulate, SimParams};
use super::env::{sample_environment, EnvParams, EnvScenario, FEATURE_NAMES};
use crate::circuit::VariableMeta;
use crate::error::{Error, Result};
use crate::learn::DataMatrix;

pub const DATASET_SCHEMA: &str = "spnplan-dataset/1";

pub const CSV_HEADER: [&str; 10] = [
    "pv_units",
    "battery_units",
    "pv_capacity_mw",
    "battery_capacity_mwh",
    "irr_energy",
    "peak_load_mw",
    "load_energy_mwh",
    "load_peak_hour",
    "mean_temp_c",
    "y",
];

/// Everything needed to regenerate a dataset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub grid: DesignGrid,
    pub sampler: DesignSampler,
    pub env: EnvParams,
    pub sim: SimParams,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.sampler.validate(&self.grid)?;
        self.env.validate()?;
        self.sim.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRow {
    pub pv_units: usize,
    pub battery_units: usize,
    pub features: [f64; 5],
    pub shortfall: bool,
}

/// Sidecar metadata written next to every dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema: String,
    pub seed: u64,
    pub rows: usize,
    pub feature_names: Vec<String>,
    pub config: SimConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
    pub meta: DatasetMeta,
}

/// Independent generator for row `row` and substream `lane` of `seed`.
///
/// Lane 0 draws the design, lane 1 the scenario, so a row's scenario can be
/// regenerated without touching any other row.
pub fn row_rng(seed: u64, row: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row.wrapping_mul(2).wrapping_add(lane));
    rng
}

/// Scenario of row `row` in any dataset generated with `seed` and `env`.
pub fn scenario_for_row(seed: u64, row: u64, env: &EnvParams) -> EnvScenario {
    sample_environment(&mut row_rng(seed, row, 1), env)
}

/// Simulates `n` labelled days. Rows are generated in parallel; the output
/// does not depend on the thread count.
pub fn generate_dataset(n: usize, seed: u64, config: &SimConfig) -> Result<Dataset> {
    config.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "dataset size must be at least 1".into(),
        ));
    }
    let rows = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (pv, bat) = config.sampler.draw(&config.grid, &mut row_rng(seed, i, 0));
            let scenario = scenario_for_row(seed, i, &config.env);
            let design = config.grid.design(pv, bat);
            let out = simulate(&design, &scenario, &config.sim);
            DatasetRow {
                pv_units: pv,
                battery_units: bat,
                features: scenario.summary(),
                shortfall: out.shortfall,
            }
        })
        .collect();
    Ok(Dataset {
        rows,
        meta: DatasetMeta {
            schema: DATASET_SCHEMA.into(),
            seed,
            rows: n,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            config: config.clone(),
        },
    })
}

/// Shortfall frequency among rows with exactly this design.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalShortfall {
    pub ratio: f64,
    pub support: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn grid(&self) -> &DesignGrid {
        &self.meta.config.grid
    }

    pub fn prevalence(&self) -> f64 {
        self.rows.iter().filter(|r| r.shortfall).count() as f64 / self.rows.len().max(1) as f64
    }

    /// `None` when no row uses the design.
    pub fn empirical_shortfall(
        &self,
        pv_units: usize,
        battery_units: usize,
    ) -> Option<EmpiricalShortfall> {
        let (support, hits) = self
            .rows
            .iter()
            .filter(|r| r.pv_units == pv_units && r.battery_units == battery_units)
            .fold((0usize, 0usize), |(n, k), r| {
                (n + 1, k + r.shortfall as usize)
            });
        (support > 0).then(|| EmpiricalShortfall {
            ratio: hits as f64 / support as f64,
            support,
        })
    }

    /// [`Dataset::empirical_shortfall`] for every grid cell in index order.
    pub fn empirical_table(&self) -> Vec<Option<EmpiricalShortfall>> {
        let grid = self.grid();
        let mut counts = vec![(0usize, 0usize); grid.len()];
        for r in &self.rows {
            if grid.contains(r.pv_units, r.battery_units) {
                let c = &mut counts[grid.index(r.pv_units, r.battery_units)];
                c.0 += 1;
                c.1 += r.shortfall as usize;
            }
        }
        counts
            .into_iter()
            .map(|(n, k)| {
                (n > 0).then(|| EmpiricalShortfall {
                    ratio: k as f64 / n as f64,
                    support: n,
                })
            })
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let rows: Vec<DatasetRow> = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let mut meta = self.meta.clone();
        meta.rows = rows.len();
        Dataset { rows, meta }
    }

    /// Variables of the learning matrix: the two design counts, the five
    /// scenario features and the label, in that order.
    ///
    /// Feature domains are the observed range, widened slightly when a
    /// feature is constant.
    pub fn variables(&self) -> Vec<VariableMeta> {
        let grid = self.grid();
        let mut vars = vec![
            VariableMeta::discrete(0, "pv_units", grid.pv_levels()),
            VariableMeta::discrete(1, "battery_units", grid.battery_levels()),
        ];
        for (f, name) in FEATURE_NAMES.iter().enumerate() {
            let (lo, hi) = self
                .rows
                .iter()
                .map(|r| r.features[f])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            let (lo, hi) = if lo.is_finite() && hi > lo {
                (lo, hi)
            } else {
                let c = if lo.is_finite() { lo } else { 0.0 };
                let g = f64::EPSILON.sqrt() * c.abs().max(1.0);
                (c - g, c + g)
            };
            vars.push(VariableMeta::continuous(2 + f, *name, lo, hi));
        }
        vars.push(VariableMeta::discrete(7, "y", 2));
        vars
    }

    pub fn to_matrix(&self) -> Result<DataMatrix> {
        self.to_matrix_with(self.variables())
    }

    /// Matrix over caller-supplied variables (for example the training
    /// set's, when building a validation matrix).
    pub fn to_matrix_with(&self, variables: Vec<VariableMeta>) -> Result<DataMatrix> {
        let mut columns = vec![Vec::with_capacity(self.rows.len()); 8];
        for r in &self.rows {
            columns[0].push(r.pv_units as f64);
            columns[1].push(r.battery_units as f64);
            for f in 0..5 {
                columns[2 + f].push(r.features[f]);
            }
            columns[7].push(r.shortfall as u8 as f64);
        }
        DataMatrix::new(variables, columns)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut file = fs::File::create(path)?;
        file.write_all(self.csv_string().as_bytes())?;
        fs::write(
            sidecar_path(path),
            serde_json::to_string_pretty(&self.meta)? + "\n",
        )?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let grid = self.grid();
        let mut out = format!("# schema: {DATASET_SCHEMA}\n{}\n", CSV_HEADER.join(","));
        for r in &self.rows {
            let d = grid.design(r.pv_units, r.battery_units);
            out.push_str(&format!(
                "{},{},{},{}",
                r.pv_units,
                r.battery_units,
                d.pv_capacity_mw(),
                d.battery_capacity_mwh()
            ));
            for f in r.features {
                out.push_str(&format!(",{f}"));
            }
            out.push_str(if r.shortfall { ",1\n" } else { ",0\n" });
        }
        out
    }

    /// Reads a dataset CSV and its sidecar, which must sit next to it.
    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let sidecar = sidecar_path(path);
        let meta: DatasetMeta =
            serde_json::from_str(&fs::read_to_string(&sidecar).map_err(|e| {
                Error::Schema(format!("cannot read sidecar {}: {e}", sidecar.display()))
            })?)?;
        if meta.schema != DATASET_SCHEMA {
            return Err(Error::Schema(format!(
                "unsupported dataset schema `{}`",
                meta.schema
            )));
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(Error::Schema(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let field = |k: usize| -> Result<f64> {
                record[k].parse::<f64>().map_err(|e| {
                    Error::Schema(format!("row {}: column `{}`: {e}", i + 1, CSV_HEADER[k]))
                })
            };
            let count = |k: usize| -> Result<usize> {
                record[k].parse::<usize>().map_err(|e| {
                    Error::Schema(format!("row {}: column `{}`: {e}", i + 1, CSV_HEADER[k]))
                })
            };
            let (pv_units, battery_units) = (count(0)?, count(1)?);
            if !meta.config.grid.contains(pv_units, battery_units) {
                return Err(Error::Schema(format!(
                    "row {}: design ({pv_units}, {battery_units}) is outside the grid",
                    i + 1
                )));
            }
            let mut features = [0.0; 5];
            for (f, slot) in features.iter_mut().enumerate() {
                *slot = field(4 + f)?;
            }
            let shortfall = match &record[9] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Schema(format!(
                        "row {}: label `{other}` is not 0/1",
                        i + 1
                    )))
                }
            };
            rows.push(DatasetRow {
                pv_units,
                battery_units,
                features,
                shortfall,
            });
        }
        if rows.len() != meta.rows {
            return Err(Error::Schema(format!(
                "sidecar promises {} rows, CSV has {}",
                meta.rows,
                rows.len()
            )));
        }
        Ok(Dataset { rows, meta })
    }
}

/// `data.csv` → `data.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

impl DesignConfig {
    /// Total units, used as the first tie-breaker between equal-cost plans.
    pub fn total_units(&self) -> usize {
        self.pv_units + self.battery_units
    }
}
