use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite investment grid: `0..=max_pv_units × 0..=max_battery_units`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignGrid {
    pub max_pv_units: usize,
    pub max_battery_units: usize,
    /// MW per PV unit.
    pub pv_unit_capacity: f64,
    /// MWh per battery unit.
    pub battery_unit_capacity: f64,
    /// MW charge/discharge limit per battery unit.
    pub battery_unit_power: f64,
}

impl Default for DesignGrid {
    fn default() -> Self {
        Self {
            max_pv_units: 10,
            max_battery_units: 10,
            pv_unit_capacity: 0.5,
            battery_unit_capacity: 1.0,
            battery_unit_power: 0.5,
        }
    }
}

impl DesignGrid {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pv_unit_capacity", self.pv_unit_capacity),
            ("battery_unit_capacity", self.battery_unit_capacity),
            ("battery_unit_power", self.battery_unit_power),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn pv_levels(&self) -> usize {
        self.max_pv_units + 1
    }

    pub fn battery_levels(&self) -> usize {
        self.max_battery_units + 1
    }

    pub fn len(&self) -> usize {
        self.pv_levels() * self.battery_levels()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, pv_units: usize, battery_units: usize) -> bool {
        pv_units <= self.max_pv_units && battery_units <= self.max_battery_units
    }

    pub fn design(&self, pv_units: usize, battery_units: usize) -> DesignConfig {
        DesignConfig {
            pv_units,
            battery_units,
            pv_unit_capacity: self.pv_unit_capacity,
            battery_unit_capacity: self.battery_unit_capacity,
            battery_unit_power: self.battery_unit_power,
        }
    }

    /// Cell index, PV-major.
    pub fn index(&self, pv_units: usize, battery_units: usize) -> usize {
        pv_units * self.battery_levels() + battery_units
    }

    pub fn at(&self, index: usize) -> DesignConfig {
        self.design(index / self.battery_levels(), index % self.battery_levels())
    }

    /// Every cell, PV-major then battery.
    pub fn designs(&self) -> impl Iterator<Item = DesignConfig> + '_ {
        (0..self.len()).map(|i| self.at(i))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub pv_units: usize,
    pub battery_units: usize,
    pub pv_unit_capacity: f64,
    pub battery_unit_capacity: f64,
    pub battery_unit_power: f64,
}

impl DesignConfig {
    pub fn pv_capacity_mw(&self) -> f64 {
        self.pv_units as f64 * self.pv_unit_capacity
    }

    pub fn battery_capacity_mwh(&self) -> f64 {
        self.battery_units as f64 * self.battery_unit_capacity
    }

    pub fn battery_power_mw(&self) -> f64 {
        self.battery_units as f64 * self.battery_unit_power
    }

    pub fn units(&self) -> (usize, usize) {
        (self.pv_units, self.battery_units)
    }
}

/// Distribution from which dataset rows draw their design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignSampler {
    Uniform,
    /// Every row uses this cell.
    Fixed {
        pv_units: usize,
        battery_units: usize,
    },
    /// Unnormalized weights per cell in [`DesignGrid::index`] order.
    Weighted {
        weights: Vec<f64>,
    },
}

impl Default for DesignSampler {
    fn default() -> Self {
        Self::Uniform
    }
}

impl DesignSampler {
    pub fn is_uniform(&self) -> bool {
        matches!(self, Self::Uniform)
    }

    pub fn validate(&self, grid: &DesignGrid) -> Result<()> {
        match self {
            Self::Uniform => Ok(()),
            Self::Fixed {
                pv_units,
                battery_units,
            } => {
                if grid.contains(*pv_units, *battery_units) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "fixed design ({pv_units}, {battery_units}) is outside the grid"
                    )))
                }
            }
            Self::Weighted { weights } => {
                if weights.len() != grid.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} sampler weights for {} grid cells",
                        weights.len(),
                        grid.len()
                    )));
                }
                if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
                    || weights.iter().sum::<f64>() <= 0.0
                {
                    return Err(Error::InvalidParameter(
                        "sampler weights must be non-negative with a positive sum".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Draws a cell as `(pv_units, battery_units)`.
    pub fn draw<R: Rng + ?Sized>(&self, grid: &DesignGrid, rng: &mut R) -> (usize, usize) {
        match self {
            Self::Uniform => {
                let i = rng.random_range(0..grid.len());
                grid.at(i).units()
            }
            Self::Fixed {
                pv_units,
                battery_units,
            } => (*pv_units, *battery_units),
            Self::Weighted { weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
                for (i, &w) in weights.iter().enumerate() {
                    if w > 0.0 && u < w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                grid.at(pick).units()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trips() {
        let g = DesignGrid::default();
        assert_eq!(g.len(), 121);
        for i in 0..g.len() {
            let d = g.at(i);
            assert_eq!(g.index(d.pv_units, d.battery_units), i);
        }
        assert_eq!(g.at(120).units(), (10, 10));
        assert_eq!(g.design(4, 3).pv_capacity_mw(), 2.0);
        assert_eq!(g.design(4, 3).battery_capacity_mwh(), 3.0);
    }

    #[test]
    fn weighted_sampler_respects_zeros() {
        let g = DesignGrid {
            max_pv_units: 1,
            max_battery_units: 1,
            ..DesignGrid::default()
        };
        let s = DesignSampler::Weighted {
            weights: vec![0.0, 1.0, 0.0, 0.0],
        };
        s.validate(&g).unwrap();
        let mut rng = rand::rng();
        for _ in 0..100 {
            assert_eq!(s.draw(&g, &mut rng), (0, 1));
        }
        assert!(DesignSampler::Fixed {
            pv_units: 2,
            battery_units: 0
        }
        .validate(&g)
        .is_err());
    }
}
