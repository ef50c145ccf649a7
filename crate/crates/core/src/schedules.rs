//! Construction of every critical-value schedule used by the procedures:
//! generator families, deterministic and adaptive truncated schedules,
//! Bonferroni, the harmonically corrected linear family, early-stopped
//! schedules and the sparsity schedule.

use crate::bounds::sparsity_normalizer;
use crate::corrections::harmonic;
use crate::error::{Error, Result};
use crate::pvalues::PValueSet;

/// Generating-function families for step-up critical values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorFamily {
    /// `g(x) = alpha * x` — the classical linear rejection curve.
    Linear,
    /// `g(x) = alpha * x / (1 - x (1 - alpha))` — asymptotically optimal
    /// rejection curve; reaches 1 at x = 1, so full-length schedules adjust
    /// the final coefficient.
    Aorc,
    /// `g(x) = min((1 - lambda) alpha x / (1 + 1/m - x), lambda)`.
    BlanchardRoquain,
    /// `g(x) = min((1 - lambda) alpha x / (1 - x (1 - alpha)), lambda)` —
    /// the tempered AORC combination.
    TemperedAorc,
}

impl GeneratorFamily {
    pub fn label(&self) -> &'static str {
        match self {
            GeneratorFamily::Linear => "linear",
            GeneratorFamily::Aorc => "aorc",
            GeneratorFamily::BlanchardRoquain => "blanchard-roquain",
            GeneratorFamily::TemperedAorc => "tempered-aorc",
        }
    }

    /// Whether the family carries the internal `min(..., lambda)` cap.
    pub(crate) fn is_capped(&self) -> bool {
        matches!(
            self,
            GeneratorFamily::BlanchardRoquain | GeneratorFamily::TemperedAorc
        )
    }
}

/// A generating function: family plus its tuning parameters.
///
/// `lambda` plays a double role, matching how the procedures are defined:
/// it tempers the capped families from the inside and is the cap applied to
/// every constructed schedule value. For `Linear` and `Aorc` only the cap
/// role remains, and `lambda = 1` is accepted as "no cap" provided the
/// resulting schedule stays below 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    family: GeneratorFamily,
    alpha: f64,
    lambda: f64,
    m: usize,
}

impl GeneratorSpec {
    pub fn new(family: GeneratorFamily, alpha: f64, lambda: f64, m: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        if m == 0 {
            return Err(Error::Config("m must be positive".into()));
        }
        let lambda_ok = if family.is_capped() {
            lambda > 0.0 && lambda < 1.0
        } else {
            lambda > 0.0 && lambda <= 1.0
        };
        if !lambda_ok {
            return Err(Error::Config(format!(
                "lambda = {lambda} invalid for family {}",
                family.label()
            )));
        }
        Ok(Self {
            family,
            alpha,
            lambda,
            m,
        })
    }

    pub fn family(&self) -> GeneratorFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Evaluate the generating function on its domain [0, 1].
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        Ok(self.eval_extended(x))
    }

    /// Evaluation extended to x >= 0 as needed by adaptive schedules where
    /// `j / m0_hat` may exceed 1. Past a pole the uncapped branch is treated
    /// as +inf, which the lambda cap then absorbs for the capped families.
    pub(crate) fn eval_extended(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        let alpha = self.alpha;
        // `1 - x(1-alpha)` written as `(1-x) + x alpha`: no cancellation on
        // [0, 1] and exactly alpha at x = 1, so g(1) = 1 holds exactly for
        // the AORC branch.
        match self.family {
            GeneratorFamily::Linear => alpha * x,
            GeneratorFamily::Aorc => {
                let denom = (1.0 - x) + x * alpha;
                if denom <= 0.0 {
                    f64::INFINITY
                } else {
                    alpha * x / denom
                }
            }
            GeneratorFamily::BlanchardRoquain => {
                let denom = 1.0 + 1.0 / self.m as f64 - x;
                let raw = if denom <= 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 - self.lambda) * alpha * x / denom
                };
                raw.min(self.lambda)
            }
            GeneratorFamily::TemperedAorc => {
                let denom = (1.0 - x) + x * alpha;
                let raw = if denom <= 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 - self.lambda) * alpha * x / denom
                };
                raw.min(self.lambda)
            }
        }
    }

    /// `g(t)/t` in algebraically simplified form: constant `alpha` for the
    /// linear family, the reduced rational forms otherwise, and `lambda/t`
    /// once the cap binds. Keeping the ratio symbolic makes the linear
    /// procedure correction exactly 1.
    pub(crate) fn ratio_extended(&self, t: f64) -> f64 {
        debug_assert!(t > 0.0);
        let alpha = self.alpha;
        let lambda = self.lambda;
        match self.family {
            GeneratorFamily::Linear => alpha,
            GeneratorFamily::Aorc => {
                let denom = (1.0 - t) + t * alpha;
                if denom <= 0.0 {
                    f64::INFINITY
                } else {
                    alpha / denom
                }
            }
            GeneratorFamily::BlanchardRoquain => {
                if t > self.cap_point() {
                    lambda / t
                } else {
                    let denom = 1.0 + 1.0 / self.m as f64 - t;
                    (1.0 - lambda) * alpha / denom
                }
            }
            GeneratorFamily::TemperedAorc => {
                if t > self.cap_point() {
                    lambda / t
                } else {
                    let denom = (1.0 - t) + t * alpha;
                    (1.0 - lambda) * alpha / denom
                }
            }
        }
    }

    /// Right-continuous inverse `sup { x : g(x) <= y }`, capped at 1.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("y = {y} must be non-negative")));
        }
        let alpha = self.alpha;
        let x = match self.family {
            GeneratorFamily::Linear => y / alpha,
            GeneratorFamily::Aorc => y / (alpha + y * (1.0 - alpha)),
            GeneratorFamily::BlanchardRoquain => {
                if y >= self.lambda {
                    1.0
                } else {
                    y * (1.0 + 1.0 / self.m as f64) / ((1.0 - self.lambda) * alpha + y)
                }
            }
            GeneratorFamily::TemperedAorc => {
                if y >= self.lambda {
                    1.0
                } else {
                    y / ((1.0 - self.lambda) * alpha + y * (1.0 - alpha))
                }
            }
        };
        Ok(x.min(1.0))
    }

    /// Point where the uncapped branch reaches the cap `lambda`
    /// (+inf for the uncapped families). `g(t)/t` increases up to this
    /// point and decreases beyond it.
    pub(crate) fn cap_point(&self) -> f64 {
        let alpha = self.alpha;
        let lambda = self.lambda;
        match self.family {
            GeneratorFamily::Linear | GeneratorFamily::Aorc => f64::INFINITY,
            GeneratorFamily::BlanchardRoquain => {
                lambda * (1.0 + 1.0 / self.m as f64) / ((1.0 - lambda) * alpha + lambda)
            }
            GeneratorFamily::TemperedAorc => lambda / (alpha + lambda - 2.0 * alpha * lambda),
        }
    }

    /// Feasibility conditions of the tempered-AORC exactness result.
    /// Violations are reported as warnings rather than hard errors.
    pub fn tempered_aorc_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if self.family != GeneratorFamily::TemperedAorc {
            return warnings;
        }
        let (alpha, lambda, m) = (self.alpha, self.lambda, self.m as f64);
        if m < 2.0 || lambda <= alpha / (m - 1.0) || lambda >= 1.0 {
            warnings.push(format!(
                "lambda = {lambda} outside (alpha/(m-1), 1) = ({}, 1)",
                alpha / (m - 1.0)
            ));
        }
        let m_min = (1.0 - alpha) / (alpha - alpha * alpha / 4.0);
        if m < m_min {
            warnings.push(format!("m = {m} below {m_min:.3}"));
        }
        if m < (1.0 - lambda) * lambda / alpha {
            warnings.push(format!(
                "m = {m} below (1-lambda)*lambda/alpha = {}",
                (1.0 - lambda) * lambda / alpha
            ));
        }
        warnings
    }
}

/// Provenance carried by every constructed schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleMeta {
    /// Generator or construction identifier, e.g. "linear", "truncated-bh".
    pub generator: String,
    pub alpha: f64,
    pub lambda: Option<f64>,
    /// Rank beyond which the values are constant.
    pub truncation: Option<usize>,
    /// Null-count estimate the schedule was built from (None = deterministic).
    pub m0_hat: Option<f64>,
    /// `(ck, dk)` divisors applied by [`crate::corrections::corrected_schedule`].
    pub corrections: Option<(f64, f64)>,
    /// Final coefficient replaced by the midpoint adjustment (AORC at k = m).
    pub last_value_adjusted: bool,
}

impl ScheduleMeta {
    pub fn new(generator: &str, alpha: f64) -> Self {
        Self {
            generator: generator.to_string(),
            alpha,
            lambda: None,
            truncation: None,
            m0_hat: None,
            corrections: None,
            last_value_adjusted: false,
        }
    }
}

/// Ordered critical values `0 < a_{1:m} <= ... <= a_{m:m} < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSchedule {
    values: Vec<f64>,
    meta: ScheduleMeta,
}

impl CriticalSchedule {
    /// Validating constructor; every schedule in the crate passes through
    /// here, so an invariant break surfaces at construction time.
    pub fn from_values(values: Vec<f64>, meta: ScheduleMeta) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Schedule("schedule must be non-empty".into()));
        }
        if !(values[0] > 0.0) {
            return Err(Error::Schedule(format!(
                "first critical value {} must be strictly positive",
                values[0]
            )));
        }
        if !(*values.last().unwrap() < 1.0) {
            return Err(Error::Schedule(format!(
                "last critical value {} must be strictly below 1",
                values.last().unwrap()
            )));
        }
        if values.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Schedule(
                "critical values must be non-decreasing".into(),
            ));
        }
        if let Some(k) = meta.truncation {
            if k == 0 || k > values.len() {
                return Err(Error::Schedule(format!(
                    "truncation level {k} outside 1..={}",
                    values.len()
                )));
            }
            let tail = values[k - 1];
            if values[k - 1..].iter().any(|&v| v != tail) {
                return Err(Error::Schedule(
                    "values past the truncation level must be constant".into(),
                ));
            }
        }
        Ok(Self { values, meta })
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Critical value at 1-based rank `j`.
    pub fn value_at(&self, rank: usize) -> f64 {
        self.values[rank - 1]
    }

    pub fn meta(&self) -> &ScheduleMeta {
        &self.meta
    }

    pub(crate) fn with_meta(self, meta: ScheduleMeta) -> Self {
        Self {
            values: self.values,
            meta,
        }
    }
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::Domain(format!(
            "truncation level k = {k} outside 1..={m}"
        )));
    }
    Ok(())
}

/// Shared builder behind the deterministic and adaptive constructors:
/// values `min(g((j ^ k) / m0_hat), lambda)` with the AORC final-coefficient
/// adjustment when the raw value would reach 1.
fn generator_schedule(
    spec: &GeneratorSpec,
    m: usize,
    k: usize,
    m0_hat: f64,
    meta: ScheduleMeta,
) -> Result<CriticalSchedule> {
    check_k(k, m)?;
    let lambda = spec.lambda();
    let mut values: Vec<f64> = (1..=m)
        .map(|j| {
            let x = j.min(k) as f64 / m0_hat;
            spec.eval_extended(x).min(lambda)
        })
        .collect();
    let mut meta = meta;
    if *values.last().unwrap() >= 1.0 {
        // reachable only at k = m: a truncated schedule repeats its final
        // value, which would already have tripped the check below
        let prev = if m >= 2 { values[m - 2] } else { 0.0 };
        if prev >= 1.0 {
            return Err(Error::Schedule(format!(
                "generator {} produces values >= 1 before the final rank",
                spec.family().label()
            )));
        }
        values[m - 1] = (prev + 1.0) / 2.0;
        meta.last_value_adjusted = true;
    }
    CriticalSchedule::from_values(values, meta)
}

/// Deterministic truncated schedule `min(g((j ^ k)/m), lambda)`.
pub fn deterministic_schedule(
    spec: &GeneratorSpec,
    m: usize,
    k: usize,
) -> Result<CriticalSchedule> {
    let mut meta = ScheduleMeta::new(spec.family().label(), spec.alpha());
    meta.lambda = Some(spec.lambda());
    meta.truncation = Some(k);
    generator_schedule(spec, m, k, m as f64, meta)
}

/// Raw plug-in schedule `min(g((j ^ k)/m0_hat), lambda)` for an arbitrary
/// positive estimate, with no clamp contract. The dependence-safe
/// constructor is [`adaptive_schedule`]; this one exists for the plain
/// plug-in procedures (and for demonstrating where they break down).
pub fn plugin_schedule(
    spec: &GeneratorSpec,
    m: usize,
    k: usize,
    m0_hat: f64,
) -> Result<CriticalSchedule> {
    if !(m0_hat.is_finite() && m0_hat > 0.0) {
        return Err(Error::Domain(format!(
            "m0_hat = {m0_hat} must be positive and finite"
        )));
    }
    let mut meta = ScheduleMeta::new(spec.family().label(), spec.alpha());
    meta.lambda = Some(spec.lambda());
    meta.truncation = Some(k);
    meta.m0_hat = Some(m0_hat);
    generator_schedule(spec, m, k, m0_hat, meta)
}

/// Adaptive truncated schedule `min(g((j ^ k)/m0_hat), lambda)`.
///
/// `m0_hat` must already be clamped into `[c * m, m / delta]`; passing an
/// unclamped estimate is a contract violation.
pub fn adaptive_schedule(
    spec: &GeneratorSpec,
    m: usize,
    k: usize,
    m0_hat: f64,
    c: f64,
    delta: f64,
) -> Result<CriticalSchedule> {
    if !(c > 0.0 && c <= 1.0 && delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!(
            "clamp fractions c = {c}, delta = {delta} must lie in (0, 1]"
        )));
    }
    if !m0_hat.is_finite() || m0_hat < c * m as f64 || m0_hat > m as f64 / delta {
        return Err(Error::Contract(format!(
            "m0_hat = {m0_hat} outside the clamp interval [{}, {}]",
            c * m as f64,
            m as f64 / delta
        )));
    }
    let mut meta = ScheduleMeta::new(spec.family().label(), spec.alpha());
    meta.lambda = Some(spec.lambda());
    meta.truncation = Some(k);
    meta.m0_hat = Some(m0_hat);
    generator_schedule(spec, m, k, m0_hat, meta)
}

/// Truncated harmonically corrected linear schedule
/// `alpha * min(j, k) / (m * H_k)`; `k = 1` is Bonferroni and `k = m` the
/// full harmonic correction.
pub fn truncated_bh_schedule(m: usize, k: usize, alpha: f64) -> Result<CriticalSchedule> {
    check_k(k, m)?;
    check_alpha(alpha)?;
    let h_k = harmonic(k as u64);
    let m_f = m as f64;
    let values: Vec<f64> = (1..=m)
        .map(|j| alpha * (j.min(k) as f64 / m_f) / h_k)
        .collect();
    let mut meta = ScheduleMeta::new("truncated-bh", alpha);
    meta.truncation = Some(k);
    meta.corrections = Some((1.0, h_k));
    CriticalSchedule::from_values(values, meta)
}

/// Fully harmonically corrected linear schedule `j * alpha / (m * H_m)`.
pub fn by_schedule(m: usize, alpha: f64) -> Result<CriticalSchedule> {
    let schedule = truncated_bh_schedule(m, m, alpha)?;
    let mut meta = ScheduleMeta::new("by", alpha);
    meta.truncation = Some(m);
    meta.corrections = Some((1.0, harmonic(m as u64)));
    Ok(schedule.with_meta(meta))
}

/// Flat Bonferroni schedule `alpha / m`.
pub fn bonferroni_schedule(m: usize, alpha: f64) -> Result<CriticalSchedule> {
    let schedule = truncated_bh_schedule(m, 1, alpha)?;
    let mut meta = ScheduleMeta::new("bonferroni", alpha);
    meta.truncation = Some(1);
    Ok(schedule.with_meta(meta))
}

/// Plain linear schedule `j * alpha / m`.
pub fn bh_schedule(m: usize, alpha: f64) -> Result<CriticalSchedule> {
    check_alpha(alpha)?;
    let spec = GeneratorSpec::new(GeneratorFamily::Linear, alpha, 1.0, m)?;
    deterministic_schedule(&spec, m, m)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    Ok(())
}

/// Data-dependent early-stopped schedule.
///
/// The cap rank `j*` is the largest `i` with `i * alpha / m` strictly below
/// the (kappa+1)-th order statistic (at least 1), so the rejection count
/// stays at or below `kappa` whenever the flat `alpha/m` rule rejects at
/// most `kappa` hypotheses. The schedule depends on the data only through
/// `p_{kappa+1:m}`, which is untouched by lowering any rejected p-value;
/// a rejected value exactly tying that order statistic is the one boundary
/// case this invariance argument does not cover.
pub fn early_stop_schedule(p: &PValueSet, kappa: usize, alpha: f64) -> Result<CriticalSchedule> {
    check_alpha(alpha)?;
    let m = p.m();
    if kappa == 0 || kappa >= m {
        return Err(Error::Domain(format!(
            "kappa = {kappa} outside 1..={}",
            m - 1
        )));
    }
    let q = p.kth_smallest(kappa + 1);
    let m_f = m as f64;
    let mut j_star = 1usize;
    for i in (1..=m).rev() {
        if alpha * (i as f64 / m_f) < q {
            j_star = i;
            break;
        }
    }
    let values: Vec<f64> = (1..=m)
        .map(|j| alpha * (j.min(j_star) as f64 / m_f))
        .collect();
    let mut meta = ScheduleMeta::new("early-stop", alpha);
    meta.truncation = Some(j_star);
    CriticalSchedule::from_values(values, meta)
}

/// Dependence-corrected early-stopped schedule:
/// `min(es_j, es_k) / H_k` over the early-stopped values `es`.
pub fn early_stop_corrected_schedule(
    p: &PValueSet,
    kappa: usize,
    k: usize,
    alpha: f64,
) -> Result<CriticalSchedule> {
    let m = p.m();
    check_k(k, m)?;
    let base = early_stop_schedule(p, kappa, alpha)?;
    let h_k = harmonic(k as u64);
    let cap = base.value_at(k);
    let values: Vec<f64> = base.values().iter().map(|&v| v.min(cap) / h_k).collect();
    let mut meta = ScheduleMeta::new("early-stop-corrected", alpha);
    meta.truncation = Some(k.min(base.meta().truncation.unwrap_or(m)));
    meta.corrections = Some((1.0, h_k));
    CriticalSchedule::from_values(values, meta)
}

/// Sparsity schedule `alpha / (m a_k) * min(j / H_j, k / H_k)`: the first
/// coefficient sits near the Bonferroni value while later ones grow at the
/// doubly logarithmic rate of the normalizer `a_k`.
pub fn sparsity_schedule(m: usize, k: usize, alpha: f64) -> Result<CriticalSchedule> {
    check_k(k, m)?;
    check_alpha(alpha)?;
    let a_k = sparsity_normalizer(k as u64);
    let m_f = m as f64;
    let ratio_k = k as f64 / harmonic(k as u64);
    let mut values = Vec::with_capacity(m);
    let mut acc = crate::corrections::HarmonicAccumulator::new();
    for j in 1..=m {
        let ratio = if j <= k {
            let h = acc.push();
            (j as f64 / h).min(ratio_k)
        } else {
            ratio_k
        };
        values.push(alpha * (ratio / m_f) / a_k);
    }
    let mut meta = ScheduleMeta::new("sparsity", alpha);
    meta.truncation = Some(k);
    CriticalSchedule::from_values(values, meta)
}

/// Largest rank up to which the sparsity schedule dominates the truncated
/// harmonically corrected one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    /// Exact crossover rank from the schedule scan.
    pub rank: usize,
    /// Asymptotic approximation `k^(1 / log log k)` (NaN for k <= 2).
    pub approximation: f64,
}

/// Scan both schedules and locate the crossover rank `j0` such that the
/// sparsity values dominate exactly on ranks `1..=j0`. The prefix shape is
/// verified during the scan; a violation would indicate a construction bug.
pub fn sparsity_crossover(m: usize, k: usize, alpha: f64) -> Result<Crossover> {
    let sp = sparsity_schedule(m, k, alpha)?;
    let bh = truncated_bh_schedule(m, k, alpha)?;
    let dominated: Vec<bool> = sp
        .values()
        .iter()
        .zip(bh.values())
        .map(|(&a, &b)| a >= b)
        .collect();
    let j0 = match dominated.iter().rposition(|&d| d) {
        Some(pos) => pos + 1,
        None => {
            return Err(Error::Internal(
                "sparsity schedule dominates nowhere, contradicting a_k <= H_k".into(),
            ))
        }
    };
    if dominated[..j0].iter().any(|&d| !d) {
        return Err(Error::Internal(format!(
            "dominance region is not a prefix (rank = {j0})"
        )));
    }
    let k_f = k as f64;
    let approximation = if k_f.ln() > 1.0 {
        k_f.powf(1.0 / k_f.ln().ln())
    } else {
        f64::NAN
    };
    Ok(Crossover {
        rank: j0,
        approximation,
    })
}
