//! Experiment configuration, read from TOML or JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spnplan_core::learn::LearnParams;
use spnplan_core::milp::SolveLimits;
use spnplan_core::planner::{CostModel, DenominatorChoice, Method};
use spnplan_core::sim::SimConfig;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub dataset_size: usize,
    /// Ascending, each in (0, 1].
    pub data_fractions: Vec<f64>,
    pub repetitions: usize,
    pub epsilon: f64,
    pub simulation: SimConfig,
    pub costs: CostModel,
    pub learn: LearnConfig,
    pub planner: PlannerConfig,
    pub oracle: OracleConfig,
    pub sweep: SweepConfig,
    pub scaling: ScalingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 2024,
            dataset_size: 45_000,
            data_fractions: vec![0.1, 0.25, 0.5, 0.75, 1.0],
            repetitions: 30,
            epsilon: 0.05,
            simulation: SimConfig::default(),
            costs: CostModel::default(),
            learn: LearnConfig::default(),
            planner: PlannerConfig::default(),
            oracle: OracleConfig::default(),
            sweep: SweepConfig::default(),
            scaling: ScalingConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnConfig {
    /// Candidates for model selection; their `seed` fields are replaced by
    /// the run's training seed.
    pub grid: Vec<LearnParams>,
    pub validation_fraction: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            grid: LearnParams::default_grid(0),
            validation_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// Methods run by `sweep`, in output order.
    pub methods: Vec<Method>,
    pub denominator: DenominatorChoice,
    pub min_support: usize,
    pub max_nodes: usize,
    pub time_budget_seconds: Option<f64>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            methods: vec![
                Method::SpnMax,
                Method::SpnExact,
                Method::Empirical,
                Method::Gep(10),
                Method::Gep(50),
            ],
            denominator: DenominatorChoice::default(),
            min_support: 20,
            max_nodes: SolveLimits::default().max_nodes,
            time_budget_seconds: None,
        }
    }
}

impl PlannerConfig {
    pub fn limits(&self) -> SolveLimits {
        SolveLimits {
            max_nodes: self.max_nodes,
            time_budget: self
                .time_budget_seconds
                .map(std::time::Duration::from_secs_f64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Scenarios per audited design.
    pub n_mc: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { n_mc: 10_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Concurrent repetitions; 0 uses every core.
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    /// Training-set sizes for the SPN-Max timing ladder.
    pub sizes: Vec<usize>,
    /// Scenario counts for the GEP timing ladder.
    pub gep_ks: Vec<usize>,
    /// Timed repetitions per point; the median is reported.
    pub runs: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            sizes: vec![4_500, 45_000],
            gep_ks: vec![10, 50, 250, 1_250],
            runs: 5,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn ascending<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    /// Reads a `.json` or `.toml` file; parse errors name the offending field.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let config: Self = if is_json {
            let mut de = serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(&mut de)
                .map_err(|e| field_error(e.path().to_string(), e.inner()))?
        } else {
            let de = toml::Deserializer::parse(&text).map_err(|e| usage(format!("config: {e}")))?;
            serde_path_to_error::deserialize(de)
                .map_err(|e| field_error(e.path().to_string(), e.inner()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field = |path: &str, msg: String| Err(usage(format!("config field `{path}`: {msg}")));
        if self.dataset_size == 0 {
            return field("dataset_size", "must be at least 1".into());
        }
        if self.data_fractions.is_empty() {
            return field("data_fractions", "must not be empty".into());
        }
        if let Some(f) = self
            .data_fractions
            .iter()
            .find(|f| !(**f > 0.0 && **f <= 1.0))
        {
            return field("data_fractions", format!("{f} is outside (0, 1]"));
        }
        if !ascending(&self.data_fractions) {
            return field("data_fractions", "must be strictly ascending".into());
        }
        if self.repetitions == 0 {
            return field("repetitions", "must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return field("epsilon", format!("{} is outside (0, 1)", self.epsilon));
        }
        if let Err(e) = self.simulation.validate() {
            return field("simulation", e.to_string());
        }
        if let Err(e) = self.costs.validate() {
            return field("costs", e.to_string());
        }
        if self.learn.grid.is_empty() {
            return field("learn.grid", "must not be empty".into());
        }
        for (i, p) in self.learn.grid.iter().enumerate() {
            if let Err(e) = p.validate() {
                return field(&format!("learn.grid[{i}]"), e.to_string());
            }
        }
        let v = self.learn.validation_fraction;
        if !(v > 0.0 && v < 1.0) {
            return field(
                "learn.validation_fraction",
                format!("{v} is outside (0, 1)"),
            );
        }
        let methods = &self.planner.methods;
        if methods.is_empty() {
            return field("planner.methods", "must not be empty".into());
        }
        if let Some(m) = methods
            .iter()
            .enumerate()
            .find(|(i, m)| methods[..*i].contains(m))
        {
            return field("planner.methods", format!("`{}` is listed twice", m.1));
        }
        if methods.contains(&Method::Gep(0)) {
            return field("planner.methods", "GEP needs at least one scenario".into());
        }
        if self.planner.max_nodes == 0 {
            return field("planner.max_nodes", "must be at least 1".into());
        }
        if let Some(t) = self.planner.time_budget_seconds {
            if !(t > 0.0 && t.is_finite()) {
                return field(
                    "planner.time_budget_seconds",
                    format!("{t} is not a positive duration"),
                );
            }
        }
        if self.oracle.n_mc == 0 {
            return field("oracle.n_mc", "must be at least 1".into());
        }
        let s = &self.scaling;
        if s.sizes.is_empty() || s.sizes.contains(&0) || !ascending(&s.sizes) {
            return field(
                "scaling.sizes",
                "must be non-empty, positive and strictly ascending".into(),
            );
        }
        if s.gep_ks.is_empty() || s.gep_ks.contains(&0) || !ascending(&s.gep_ks) {
            return field(
                "scaling.gep_ks",
                "must be non-empty, positive and strictly ascending".into(),
            );
        }
        if s.runs == 0 {
            return field("scaling.runs", "must be at least 1".into());
        }
        Ok(())
    }

    /// Learning grid with every candidate seeded by `seed`.
    pub fn learn_grid(&self, seed: u64) -> Vec<LearnParams> {
        self.learn
            .grid
            .iter()
            .map(|p| LearnParams { seed, ..p.clone() })
            .collect()
    }
}

fn field_error(path: String, e: &impl std::fmt::Display) -> CliError {
    if path == "." || path.is_empty() {
        usage(format!("config: {e}"))
    } else {
        usage(format!("config field `{path}`: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(name: &str, text: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("spnplan-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn message(r: Result<ExperimentConfig, CliError>) -> String {
        match r {
            Err(CliError::Usage(m)) => m,
            other => panic!("expected a usage error, got {other:?}"),
        }
    }

    #[test]
    fn toml_and_json_agree() {
        let t = write(
            "a.toml",
            "master_seed = 7\nepsilon = 0.1\n[simulation.sim]\ntolerance_mw = 0.05\n",
        );
        let j = write(
            "a.json",
            r#"{"master_seed": 7, "epsilon": 0.1, "simulation": {"sim": {"tolerance_mw": 0.05}}}"#,
        );
        let a = ExperimentConfig::load(&t).unwrap();
        assert_eq!(a, ExperimentConfig::load(&j).unwrap());
        assert_eq!(a.simulation.sim.tolerance_mw, 0.05);
        assert_eq!(a.dataset_size, 45_000);
    }

    #[test]
    fn type_errors_name_the_field() {
        let m = message(ExperimentConfig::load(&write(
            "b.toml",
            "[simulation.grid]\nmax_pv_units = \"ten\"\n",
        )));
        assert!(m.contains("simulation.grid.max_pv_units"), "{m}");
        let m = message(ExperimentConfig::load(&write(
            "b.json",
            r#"{"planner": {"methods": ["spn_max", "nope"]}}"#,
        )));
        assert!(m.contains("planner.methods"), "{m}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let m = message(ExperimentConfig::load(&write(
            "c.toml",
            "[oracle]\nnmc = 5\n",
        )));
        assert!(m.contains("oracle") && m.contains("nmc"), "{m}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let m = message(ExperimentConfig::load(&write(
            "d.toml",
            "data_fractions = [0.5, 0.25]\n",
        )));
        assert!(m.contains("data_fractions"), "{m}");
        let m = message(ExperimentConfig::load(&write(
            "e.toml",
            "[[learn.grid]]\nn_row_clusters = 1\n",
        )));
        assert!(m.contains("learn.grid[0]"), "{m}");
        let m = message(ExperimentConfig::load(&write("f.toml", "epsilon = 1.5\n")));
        assert!(m.contains("epsilon"), "{m}");
    }
}
