use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prototypical per-unit household load shapes; each peaks at 1.0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadShape {
    EveningPeak,
    MorningPeak,
    DoublePeak,
}

impl LoadShape {
    pub const ALL: [LoadShape; 3] = [Self::EveningPeak, Self::MorningPeak, Self::DoublePeak];

    /// Per-unit demand at hour `t` of the day.
    pub fn value(self, t: f64) -> f64 {
        static PEAKS: OnceLock<[f64; 3]> = OnceLock::new();
        let peaks = PEAKS.get_or_init(|| {
            // Coarse scan, then refine around the best grid point.
            LoadShape::ALL.map(|shape| {
                let coarse = (0..=2400)
                    .map(|i| i as f64 / 100.0)
                    .fold(0.0, |best: f64, t| {
                        if shape.raw(t) > shape.raw(best) {
                            t
                        } else {
                            best
                        }
                    });
                golden_max(|t| shape.raw(t), coarse - 0.01, coarse + 0.01)
            })
        });
        self.raw(t) / peaks[self as usize]
    }

    fn raw(self, t: f64) -> f64 {
        let bump = |center: f64, width: f64| (-0.5 * ((t - center) / width).powi(2)).exp();
        match self {
            Self::EveningPeak => 0.40 + 0.15 * bump(8.0, 1.5) + 0.60 * bump(19.5, 2.0),
            Self::MorningPeak => 0.40 + 0.55 * bump(7.5, 1.5) + 0.30 * bump(20.0, 2.0),
            Self::DoublePeak => 0.35 + 0.45 * bump(7.5, 1.5) + 0.50 * bump(19.0, 2.0),
        }
    }
}

/// Maximum of a unimodal function on `[a, b]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f((a + b) / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvParams {
    /// Hourly steps per scenario.
    pub horizon: usize,
    pub sunrise_hour: f64,
    pub sunset_hour: f64,
    /// Daily clearness factor ~ Beta(alpha, beta).
    pub clearness_alpha: f64,
    pub clearness_beta: f64,
    /// Overrides the Beta draw when set.
    pub fixed_clearness: Option<f64>,
    /// Standard deviation of the hourly multiplicative irradiance noise.
    pub irradiance_noise: f64,
    pub temp_mean_c: f64,
    pub temp_amplitude_c: f64,
    pub temp_peak_hour: f64,
    pub temp_noise_c: f64,
    /// Demand at the shape peak for a household factor of 1.
    pub base_load_mw: f64,
    /// Log-scale standard deviation of the household-count factor.
    pub household_sigma: f64,
    pub load_noise: f64,
    /// Shapes drawn uniformly per scenario.
    pub load_shapes: Vec<LoadShape>,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            horizon: 24,
            sunrise_hour: 6.0,
            sunset_hour: 18.0,
            clearness_alpha: 5.0,
            clearness_beta: 2.0,
            fixed_clearness: None,
            irradiance_noise: 0.05,
            temp_mean_c: 24.0,
            temp_amplitude_c: 7.0,
            temp_peak_hour: 15.0,
            temp_noise_c: 1.5,
            base_load_mw: 0.6,
            household_sigma: 0.2,
            load_noise: 0.05,
            load_shapes: LoadShape::ALL.to_vec(),
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.sunrise_hour < self.sunset_hour) {
            return bad("sunrise_hour must precede sunset_hour".into());
        }
        if self.fixed_clearness.is_none()
            && !(self.clearness_alpha > 0.0 && self.clearness_beta > 0.0)
        {
            return bad("clearness Beta parameters must be positive".into());
        }
        if let Some(c) = self.fixed_clearness {
            if !(0.0..=1.0).contains(&c) {
                return bad(format!("fixed_clearness must lie in [0, 1], got {c}"));
            }
        }
        for (name, v) in [
            ("irradiance_noise", self.irradiance_noise),
            ("temp_noise_c", self.temp_noise_c),
            ("household_sigma", self.household_sigma),
            ("load_noise", self.load_noise),
            ("base_load_mw", self.base_load_mw),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.load_shapes.is_empty() {
            return bad("load_shapes must not be empty".into());
        }
        Ok(())
    }

    /// Cloud-free irradiance factor at hour `t`.
    pub fn clear_sky(&self, t: f64) -> f64 {
        if t <= self.sunrise_hour || t >= self.sunset_hour {
            return 0.0;
        }
        (PI * (t - self.sunrise_hour) / (self.sunset_hour - self.sunrise_hour)).sin()
    }

    /// Mean of the daily clearness factor.
    pub fn mean_clearness(&self) -> f64 {
        self.fixed_clearness
            .unwrap_or(self.clearness_alpha / (self.clearness_alpha + self.clearness_beta))
    }

    pub fn temperature_profile(&self, t: f64) -> f64 {
        self.temp_mean_c
            + self.temp_amplitude_c * (2.0 * PI * (t - self.temp_peak_hour) / 24.0).cos()
    }
}

/// One stochastic day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvScenario {
    /// Per-step factor in `[0, 1]`.
    pub irradiance: Vec<f64>,
    pub temperature: Vec<f64>,
    /// MW, non-negative.
    pub load: Vec<f64>,
}

impl EnvScenario {
    pub fn horizon(&self) -> usize {
        self.load.len()
    }

    /// Five-number summary stored in datasets, in [`FEATURE_NAMES`] order.
    pub fn summary(&self) -> [f64; 5] {
        let (peak_hour, peak) =
            self.load
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                    if v > best.1 {
                        (i, v)
                    } else {
                        best
                    }
                });
        [
            self.irradiance.iter().sum(),
            peak.max(0.0),
            self.load.iter().sum(),
            peak_hour as f64,
            self.temperature.iter().sum::<f64>() / self.temperature.len() as f64,
        ]
    }
}

pub const FEATURE_NAMES: [&str; 5] = [
    "irr_energy",
    "peak_load_mw",
    "load_energy_mwh",
    "load_peak_hour",
    "mean_temp_c",
];

/// Draws one day; the stream of draws depends only on `rng` and `params`.
pub fn sample_environment<R: Rng + ?Sized>(rng: &mut R, params: &EnvParams) -> EnvScenario {
    let n = params.horizon;
    let clearness = match params.fixed_clearness {
        Some(c) => c,
        None => Beta::new(params.clearness_alpha, params.clearness_beta)
            .expect("validated Beta parameters")
            .sample(rng),
    };
    let shape = params.load_shapes[rng.random_range(0..params.load_shapes.len())];
    let z: f64 = StandardNormal.sample(rng);
    let household = (params.household_sigma * z).exp();

    let mut irradiance = Vec::with_capacity(n);
    let mut temperature = Vec::with_capacity(n);
    let mut load = Vec::with_capacity(n);
    for step in 0..n {
        let t = (step % 24) as f64;
        let (zi, zt, zl): (f64, f64, f64) = (
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let irr = params.clear_sky(t) * clearness * (1.0 + params.irradiance_noise * zi);
        irradiance.push(irr.clamp(0.0, 1.0));
        temperature.push(params.temperature_profile(t) + params.temp_noise_c * zt);
        let l = params.base_load_mw * household * shape.value(t) * (1.0 + params.load_noise * zl);
        load.push(l.max(0.0));
    }
    EnvScenario {
        irradiance,
        temperature,
        load,
    }
}
