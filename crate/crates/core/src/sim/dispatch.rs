//! Single-bus PV + battery + load dispatch.
//!
//! Charging is greedy: every MW of PV surplus goes into the battery up to the
//! power and capacity limits. Discharging is greedy with a reserve: the
//! battery covers as much of the current deficit as it can while keeping
//! enough energy for the rest of the day to hold every later deficit at or
//! below a target peak. The target is the smallest peak the design can
//! achieve on the scenario, so the reported `max_deficit` (and the label)
//! can only improve when PV or storage is added.

use serde::{Deserialize, Serialize};

use super::design::DesignConfig;
use super::env::EnvScenario;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Fractional PV output loss per °C above `derate_reference_c`.
    pub derate_per_c: f64,
    pub derate_reference_c: f64,
    /// Shortfall tolerance τ in MW.
    pub tolerance_mw: f64,
    /// State of charge at the first step as a fraction of capacity.
    pub initial_soc_fraction: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            charge_efficiency: 0.95,
            discharge_efficiency: 0.95,
            derate_per_c: 0.004,
            derate_reference_c: 25.0,
            tolerance_mw: 0.0,
            initial_soc_fraction: 0.5,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("charge_efficiency", self.charge_efficiency),
            ("discharge_efficiency", self.discharge_efficiency),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.initial_soc_fraction) {
            return Err(Error::InvalidParameter(
                "initial_soc_fraction must lie in [0, 1]".into(),
            ));
        }
        if !(self.tolerance_mw >= 0.0 && self.derate_per_c >= 0.0) {
            return Err(Error::InvalidParameter(
                "tolerance_mw and derate_per_c must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn derate(&self, temperature_c: f64) -> f64 {
        (1.0 - self.derate_per_c * (temperature_c - self.derate_reference_c).max(0.0)).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    /// `true` when the peak deficit exceeds the tolerance.
    pub shortfall: bool,
    /// MW.
    pub max_deficit: f64,
    /// MWh.
    pub energy_unserved: f64,
}

/// Per-step dispatch record; all power values in MW over one-hour steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DispatchTrace {
    pub pv: Vec<f64>,
    pub load: Vec<f64>,
    /// Power drawn from PV into the battery.
    pub charge: Vec<f64>,
    /// Power delivered by the battery to the load.
    pub discharge: Vec<f64>,
    pub curtailed: Vec<f64>,
    pub deficit: Vec<f64>,
    /// State of charge in MWh; `soc[t]` is the level before step `t`, so it
    /// has one more entry than the other series.
    pub soc: Vec<f64>,
}

impl DispatchTrace {
    /// Load actually served in MWh.
    pub fn served(&self) -> f64 {
        self.load
            .iter()
            .zip(&self.deficit)
            .map(|(l, d)| l - d)
            .sum()
    }
}

struct Balance {
    surplus: Vec<f64>,
    deficit: Vec<f64>,
    capacity: f64,
    power: f64,
    soc0: f64,
    eta_c: f64,
    eta_d: f64,
}

impl Balance {
    fn new(design: &DesignConfig, scenario: &EnvScenario, params: &SimParams) -> (Self, Vec<f64>) {
        let pv: Vec<f64> = scenario
            .irradiance
            .iter()
            .zip(&scenario.temperature)
            .map(|(irr, temp)| design.pv_capacity_mw() * irr * params.derate(*temp))
            .collect();
        let surplus = pv
            .iter()
            .zip(&scenario.load)
            .map(|(p, l)| (p - l).max(0.0))
            .collect();
        let deficit = pv
            .iter()
            .zip(&scenario.load)
            .map(|(p, l)| (l - p).max(0.0))
            .collect();
        let capacity = design.battery_capacity_mwh();
        let balance = Self {
            surplus,
            deficit,
            capacity,
            power: design.battery_power_mw(),
            soc0: capacity * params.initial_soc_fraction,
            eta_c: params.charge_efficiency,
            eta_d: params.discharge_efficiency,
        };
        (balance, pv)
    }

    /// Energy the battery must hold before each step so that no later
    /// deficit exceeds `target`; `None` if the design cannot do it.
    ///
    /// `reserve[t]` is the requirement before step `t`; the last entry is 0.
    fn reserve(&self, target: f64) -> Option<Vec<f64>> {
        let n = self.deficit.len();
        let mut r = vec![0.0; n + 1];
        for t in (0..n).rev() {
            let need = (self.deficit[t] - target).max(0.0);
            r[t] = if need > 0.0 {
                if need > self.power {
                    return None;
                }
                r[t + 1] + need / self.eta_d
            } else {
                (r[t + 1] - self.eta_c * self.surplus[t].min(self.power)).max(0.0)
            };
            if r[t] > self.capacity {
                return None;
            }
        }
        (r[0] <= self.soc0).then_some(r)
    }

    fn peak_floor(&self, tolerance: f64) -> f64 {
        let hi_start = self.deficit.iter().copied().fold(0.0, f64::max);
        let (mut lo, mut hi) = if self.reserve(tolerance).is_some() {
            (0.0, tolerance.min(hi_start))
        } else {
            (tolerance, hi_start)
        };
        if self.reserve(lo).is_some() {
            return lo;
        }
        // Invariant: lo infeasible, hi feasible.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.reserve(mid).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn run(&self, target: f64, pv: Vec<f64>, load: &[f64]) -> DispatchTrace {
        let reserve = self.reserve(target).expect("target is feasible");
        let n = self.deficit.len();
        let mut tr = DispatchTrace {
            pv,
            load: load.to_vec(),
            charge: vec![0.0; n],
            discharge: vec![0.0; n],
            curtailed: vec![0.0; n],
            deficit: vec![0.0; n],
            soc: Vec::with_capacity(n + 1),
        };
        let mut soc = self.soc0;
        tr.soc.push(soc);
        for t in 0..n {
            if self.surplus[t] > 0.0 {
                let c = self.surplus[t]
                    .min(self.power)
                    .min((self.capacity - soc).max(0.0) / self.eta_c);
                tr.charge[t] = c;
                tr.curtailed[t] = self.surplus[t] - c;
                soc = (soc + c * self.eta_c).min(self.capacity);
            } else if self.deficit[t] > 0.0 {
                let d = self.deficit[t];
                let required = (d - target).max(0.0);
                let spare = ((soc - reserve[t + 1]) * self.eta_d).max(0.0);
                let out = d
                    .min(self.power)
                    .min(soc * self.eta_d)
                    .min(required.max(spare));
                tr.discharge[t] = out;
                tr.deficit[t] = d - out;
                soc = (soc - out / self.eta_d).max(0.0);
            }
            tr.soc.push(soc);
        }
        tr
    }
}

/// Simulates one day and labels it.
pub fn simulate(design: &DesignConfig, scenario: &EnvScenario, params: &SimParams) -> SimOutcome {
    outcome(&simulate_trace(design, scenario, params), params)
}

pub fn simulate_trace(
    design: &DesignConfig,
    scenario: &EnvScenario,
    params: &SimParams,
) -> DispatchTrace {
    let (balance, pv) = Balance::new(design, scenario, params);
    let target = balance.peak_floor(params.tolerance_mw);
    balance.run(target, pv, &scenario.load)
}

/// Shortfall label only; a single feasibility pass, no dispatch.
pub fn shortfall_label(design: &DesignConfig, scenario: &EnvScenario, params: &SimParams) -> bool {
    let (balance, _) = Balance::new(design, scenario, params);
    balance.reserve(params.tolerance_mw).is_none()
}

pub fn outcome(trace: &DispatchTrace, params: &SimParams) -> SimOutcome {
    let max_deficit = trace.deficit.iter().copied().fold(0.0, f64::max);
    SimOutcome {
        shortfall: max_deficit > params.tolerance_mw,
        max_deficit,
        energy_unserved: trace.deficit.iter().sum(),
    }
}
