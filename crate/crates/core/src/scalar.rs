//! Floating-point abstraction shared by the circuit and MILP layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Log-probability floor applied to every fitted leaf table.
///
/// Keeps leaf outputs finite so that interval bounds (and therefore big-M
/// constants) stay bounded.
pub const LOG_PROB_FLOOR: f64 = -30.0;

/// Real scalar usable for log-space inference and linear models.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`; total for every implementor.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar always converts to f64")
    }

    /// Absolute tolerance for "sums to one" style checks.
    fn normalization_tolerance() -> Self {
        Self::of(1e-9).max(Self::epsilon() * Self::of(64.0))
    }

    fn log_floor() -> Self {
        Self::of(LOG_PROB_FLOOR)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `log(Σ exp(x_i))` with the max-shift trick. Empty input gives `-inf`.
pub fn log_sum_exp<F: Scalar>(values: impl IntoIterator<Item = F> + Clone) -> F {
    let max = values
        .clone()
        .into_iter()
        .fold(F::neg_infinity(), |acc, v| acc.max(v));
    if max == F::neg_infinity() {
        return max;
    }
    if max == F::infinity() {
        return max;
    }
    let shifted: F = values.into_iter().map(|v| (v - max).exp()).sum();
    max + shifted.ln()
}
