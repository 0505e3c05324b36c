use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{row_rng, SimConfig};
use super::design::DesignConfig;
use super::dispatch::shortfall_label;
use super::env::sample_environment;

/// Fresh Monte-Carlo shortfall estimate with a 95% Wald interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub estimate: f64,
    pub half_width: f64,
    pub n_mc: usize,
}

impl OracleEstimate {
    pub fn from_counts(hits: usize, n_mc: usize) -> Self {
        let p = hits as f64 / n_mc as f64;
        Self {
            estimate: p,
            half_width: 1.96 * (p * (1.0 - p) / n_mc as f64).sqrt(),
            n_mc,
        }
    }

    pub fn lower(&self) -> f64 {
        (self.estimate - self.half_width).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        (self.estimate + self.half_width).min(1.0)
    }

    /// Estimate within `epsilon` up to the interval half-width.
    pub fn passes(&self, epsilon: f64) -> bool {
        self.estimate <= epsilon + self.half_width
    }
}

/// Stream namespace for oracle scenarios, kept apart from dataset rows.
const ORACLE_STREAM: u64 = 1 << 62;

/// Shortfall probability of `design` over `n_mc` fresh scenarios.
///
/// Scenario `i` depends only on `(seed, i)`, so different designs audited
/// with the same seed see the same days (common random numbers).
pub fn ground_truth_oracle(
    design: &DesignConfig,
    n_mc: usize,
    seed: u64,
    config: &SimConfig,
) -> OracleEstimate {
    let hits = (0..n_mc as u64)
        .into_par_iter()
        .filter(|&i| {
            let scenario =
                sample_environment(&mut row_rng(seed, ORACLE_STREAM + i, 1), &config.env);
            shortfall_label(design, &scenario, &config.sim)
        })
        .count();
    OracleEstimate::from_counts(hits, n_mc.max(1))
}

/// Oracle estimate for every grid cell, in grid index order, sharing one
/// scenario set across cells.
pub fn oracle_grid(n_mc: usize, seed: u64, config: &SimConfig) -> Vec<OracleEstimate> {
    let scenarios: Vec<_> = (0..n_mc as u64)
        .into_par_iter()
        .map(|i| sample_environment(&mut row_rng(seed, ORACLE_STREAM + i, 1), &config.env))
        .collect();
    let designs: Vec<DesignConfig> = config.grid.designs().collect();
    designs
        .par_iter()
        .map(|d| {
            let hits = scenarios
                .iter()
                .filter(|s| shortfall_label(d, s, &config.sim))
                .count();
            OracleEstimate::from_counts(hits, n_mc.max(1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wald_interval() {
        let e = OracleEstimate::from_counts(500, 10_000);
        assert!((e.half_width - 1.96 * (0.05f64 * 0.95 / 10_000.0).sqrt()).abs() < 1e-15);
        assert!(e.half_width <= 0.01);
        let certain = OracleEstimate::from_counts(10, 10);
        assert_eq!((certain.estimate, certain.half_width), (1.0, 0.0));
    }

    #[test]
    fn zero_supply_always_falls_short() {
        let cfg = SimConfig::default();
        let e = ground_truth_oracle(&cfg.grid.design(0, 0), 200, 3, &cfg);
        assert_eq!(e.estimate, 1.0);
    }
}
