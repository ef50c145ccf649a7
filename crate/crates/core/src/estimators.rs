//! Null-proportion estimation and the sparsity clamp.

use crate::error::{Error, Result};
use crate::pvalues::PValueSet;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// `m (1 - F_m(lambda) + 1/m) / (1 - lambda)`, which simplifies to
/// `(#{p_i > lambda} + 1) / (1 - lambda)`. The estimate can exceed `m`.
pub fn storey_estimate(p: &PValueSet, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(storey_core(p, lambda))
}

fn storey_core(p: &PValueSet, lambda: f64) -> f64 {
    let above = p.values().iter().filter(|&&v| v > lambda).count();
    (above as f64 + 1.0) / (1.0 - lambda)
}

/// Estimate value certified to depend on the data only through the
/// p-values at or above `lambda`; the certificate is what makes the
/// independence bound for restricted estimators available downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedEstimate {
    value: f64,
    lambda: f64,
}

impl RestrictedEstimate {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Same value as [`storey_estimate`]; the counting form makes the
/// restriction structural — only the number of p-values above `lambda`
/// enters, so perturbations below `lambda` cannot move the estimate.
pub fn storey_restricted(p: &PValueSet, lambda: f64) -> Result<RestrictedEstimate> {
    check_lambda(lambda)?;
    Ok(RestrictedEstimate {
        value: storey_core(p, lambda),
        lambda,
    })
}

/// Clamp a raw estimate into `[c m, m / delta]`.
pub fn clamp_estimate(m0_tilde: f64, m: usize, c: f64, delta: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0 && delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!(
            "clamp fractions c = {c}, delta = {delta} must lie in (0, 1]"
        )));
    }
    let lower = c * m as f64;
    let upper = m as f64 / delta;
    if lower > upper {
        return Err(Error::Config(format!(
            "empty clamp interval: c m = {lower} exceeds m/delta = {upper}"
        )));
    }
    if !m0_tilde.is_finite() {
        return Err(Error::Domain(format!("estimate {m0_tilde} is not finite")));
    }
    Ok(lower.max(upper.min(m0_tilde)))
}

/// Which raw estimator feeds the clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    Storey,
    /// Externally supplied null count (clamped like any other estimate).
    Fixed(f64),
}

/// Estimator selection plus clamp fractions, as consumed by the front end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub lambda: f64,
    pub c: f64,
    pub delta: f64,
}

impl EstimatorConfig {
    /// Common exploratory choice: Storey at lambda = 1/2 with a loose lower
    /// clamp and no upper shrinkage.
    pub fn default_storey() -> Self {
        Self {
            kind: EstimatorKind::Storey,
            lambda: 0.5,
            c: 0.5,
            delta: 1.0,
        }
    }

    /// Raw estimate before clamping.
    pub fn raw_estimate(&self, p: &PValueSet) -> Result<f64> {
        match self.kind {
            EstimatorKind::Storey => storey_estimate(p, self.lambda),
            EstimatorKind::Fixed(value) => Ok(value),
        }
    }

    /// Clamped estimate ready for schedule construction.
    pub fn estimate(&self, p: &PValueSet) -> Result<f64> {
        clamp_estimate(self.raw_estimate(p)?, p.m(), self.c, self.delta)
    }
}
