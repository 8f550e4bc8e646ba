use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default mass flow per unit wrench magnitude, kg/(N·s).
pub const DEFAULT_C1: f64 = 1.3e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuelModel {
    pub c1: f64,
    pub m0: f64,
}

impl FuelModel {
    pub fn new(c1: f64, m0: f64) -> Result<Self> {
        if !(c1 > 0.0) || !c1.is_finite() || !m0.is_finite() {
            return Err(Error::Domain(format!("fuel model needs c1 > 0 and finite m0, got c1={c1}, m0={m0}")));
        }
        Ok(Self { c1, m0 })
    }
}

impl Default for FuelModel {
    fn default() -> Self {
        Self { c1: DEFAULT_C1, m0: 0.0 }
    }
}

/// `m(t) = m0 + ∫ c1 ‖f̂‖ dt` by the trapezoid rule on the given samples.
pub fn fuel_consumed(times: &[f64], wrench_norms: &[f64], model: &FuelModel) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = model.m0;
    for i in 0..times.len().min(wrench_norms.len()) {
        if i > 0 {
            acc += 0.5 * model.c1 * (wrench_norms[i] + wrench_norms[i - 1]) * (times[i] - times[i - 1]);
        }
        out.push(acc);
    }
    out
}
