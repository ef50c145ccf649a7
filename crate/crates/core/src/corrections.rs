//! Harmonic sums plus the procedure correction `C_k` and the dependence
//! correction `D_k` that turn independence-valid schedules into
//! dependence-valid ones.

use crate::error::{Error, Result};
use crate::schedules::{CriticalSchedule, GeneratorFamily, GeneratorSpec};

const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

/// Direct-summation threshold; larger arguments use the asymptotic
/// expansion, whose truncation error is far below 1e-12 there.
const DIRECT_SUM_LIMIT: u64 = 10_000_000;

/// Compensated ascending partial sums of `1/i`. Every harmonic value in the
/// crate flows through this accumulator so that identical prefixes are
/// bit-identical wherever they are computed.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct HarmonicAccumulator {
    sum: f64,
    compensation: f64,
    n: u64,
}

impl HarmonicAccumulator {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// Advance to `H_{n+1}` and return it.
    pub(crate) fn push(&mut self) -> f64 {
        self.n += 1;
        let term = 1.0 / self.n as f64;
        let y = term - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
        self.sum
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// `H_k`, the k-th harmonic number (`H_0 = 0`).
pub fn harmonic(k: u64) -> f64 {
    if k <= DIRECT_SUM_LIMIT {
        let mut acc = HarmonicAccumulator::new();
        for _ in 0..k {
            acc.push();
        }
        acc.value()
    } else {
        let x = k as f64;
        x.ln() + EULER_MASCHERONI + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
            + 1.0 / (120.0 * x.powi(4))
    }
}

/// How much the dependence correction shrinks under truncation: `H_k / H_m`.
pub fn truncation_savings(k: u64, m: u64) -> Result<f64> {
    if k == 0 || k > m {
        return Err(Error::Domain(format!("k = {k} outside 1..={m}")));
    }
    Ok(harmonic(k) / harmonic(m))
}

/// Deterministic vs adaptive critical values; selects both the `C_k`
/// evaluation rule and the `D_k` table column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionMode {
    Deterministic,
    Adaptive,
}

/// Independence benchmark vs arbitrary dependence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DependenceRegime {
    Independent,
    Arbitrary,
}

/// Closed-form procedure correction at `B = k / (c m)`:
/// 1 for the linear family, `1/(1 - B(1-alpha))` for the AORC, and the
/// tempered forms capped at `1/alpha` for the remaining two.
pub fn procedure_correction_table(
    family: GeneratorFamily,
    k: usize,
    m: usize,
    c: f64,
    alpha: f64,
    lambda: f64,
) -> Result<f64> {
    if k == 0 || k > m {
        return Err(Error::Domain(format!("k = {k} outside 1..={m}")));
    }
    let b = k as f64 / (c * m as f64);
    if b > 1.0 {
        return Err(Error::Domain(format!("B = k/(c m) = {b} exceeds 1")));
    }
    Ok(match family {
        GeneratorFamily::Linear => 1.0,
        GeneratorFamily::Aorc => 1.0 / (1.0 - b * (1.0 - alpha)),
        GeneratorFamily::BlanchardRoquain => {
            ((1.0 - lambda) / (1.0 + 1.0 / m as f64 - b)).min(1.0 / alpha)
        }
        GeneratorFamily::TemperedAorc => {
            ((1.0 - lambda) / (1.0 - b * (1.0 - alpha))).min(1.0 / alpha)
        }
    })
}

/// Effective upper argument `B = min(g^{-1}(lambda), k/(c m))` of the
/// supremum-based corrections.
pub fn effective_upper_argument(spec: &GeneratorSpec, k: usize, m: usize, c: f64) -> Result<f64> {
    let inv = spec.inverse(spec.lambda())?;
    Ok(inv.min(k as f64 / (c * m as f64)))
}

/// Supremum-based procedure correction.
///
/// `g(t)/t` rises on the uncapped branch and falls once the cap binds, so
/// the supremum sits at the cap point clamped into the search range; for the
/// uncapped families this is the plain right endpoint. A grid sweep verifies
/// the unimodality argument in debug builds.
pub fn procedure_correction_sup(
    spec: &GeneratorSpec,
    k: usize,
    m: usize,
    c: f64,
    delta: f64,
    mode: CorrectionMode,
) -> Result<f64> {
    if k == 0 || k > m {
        return Err(Error::Domain(format!("k = {k} outside 1..={m}")));
    }
    if !(c > 0.0 && c <= 1.0 && delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!(
            "clamp fractions c = {c}, delta = {delta} must lie in (0, 1]"
        )));
    }
    let alpha = spec.alpha();
    let m_f = m as f64;
    let b = effective_upper_argument(spec, k, m, c)?;
    let ratio = |t: f64| spec.ratio_extended(t);
    let value = match mode {
        CorrectionMode::Adaptive => {
            let lo = delta / m_f;
            if !(b >= lo) {
                return Err(Error::Config(format!(
                    "empty supremum domain: B = {b} < delta/m = {lo}"
                )));
            }
            let t_star = spec.cap_point().min(b).max(lo);
            let sup = ratio(t_star);
            #[cfg(debug_assertions)]
            grid_check_sup(&ratio, lo, b, sup);
            sup / alpha
        }
        CorrectionMode::Deterministic => {
            let j_max = (m_f * b).floor() as usize;
            if j_max == 0 {
                return Err(Error::Config(format!(
                    "empty supremum domain: floor(m B) = 0 with B = {b}"
                )));
            }
            let peak = m_f * spec.cap_point();
            let mut candidates = vec![j_max];
            if peak.is_finite() {
                for j in [peak.floor() as i64, peak.ceil() as i64] {
                    if j >= 1 && (j as usize) <= j_max {
                        candidates.push(j as usize);
                    }
                }
            }
            let sup = candidates
                .into_iter()
                .map(|j| ratio(j as f64 / m_f))
                .fold(f64::NEG_INFINITY, f64::max);
            #[cfg(debug_assertions)]
            grid_check_sup_discrete(&ratio, m_f, j_max, sup);
            sup / alpha
        }
    };
    Ok(value)
}

#[cfg(debug_assertions)]
fn grid_check_sup(ratio: &dyn Fn(f64) -> f64, lo: f64, hi: f64, sup: f64) {
    for i in 0..=1024u32 {
        let t = lo + (hi - lo) * i as f64 / 1024.0;
        if t > 0.0 {
            debug_assert!(
                ratio(t) <= sup * (1.0 + 1e-9) + 1e-12,
                "supremum candidate beaten at t = {t}: {} > {sup}",
                ratio(t)
            );
        }
    }
}

#[cfg(debug_assertions)]
fn grid_check_sup_discrete(ratio: &dyn Fn(f64) -> f64, m_f: f64, j_max: usize, sup: f64) {
    let step = (j_max / 1024).max(1);
    for j in (1..=j_max).step_by(step) {
        debug_assert!(
            ratio(j as f64 / m_f) <= sup * (1.0 + 1e-9) + 1e-12,
            "supremum candidate beaten at j = {j}"
        );
    }
}

/// Dependence correction `D_k`: 1 or `H_k` in the deterministic cases,
/// `1/c` or `(1/c) log(1 + k/(c delta))` in the adaptive ones.
pub fn dependence_correction(
    regime: DependenceRegime,
    mode: CorrectionMode,
    k: u64,
    c: f64,
    delta: f64,
) -> f64 {
    match (regime, mode) {
        (DependenceRegime::Independent, CorrectionMode::Deterministic) => 1.0,
        (DependenceRegime::Arbitrary, CorrectionMode::Deterministic) => harmonic(k),
        (DependenceRegime::Independent, CorrectionMode::Adaptive) => 1.0 / c,
        (DependenceRegime::Arbitrary, CorrectionMode::Adaptive) => {
            (1.0 + k as f64 / (c * delta)).ln() / c
        }
    }
}

/// The `(C_k, D_k, B)` triple for one procedure/regime choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionFactors {
    pub ck: f64,
    pub dk: f64,
    /// Effective upper argument `B = min(g^{-1}(lambda), k/(c m))`.
    pub b: f64,
    pub regime: DependenceRegime,
    pub mode: CorrectionMode,
}

/// Compute both correction factors for a generator-based schedule.
pub fn correction_factors(
    spec: &GeneratorSpec,
    k: usize,
    m: usize,
    c: f64,
    delta: f64,
    regime: DependenceRegime,
    mode: CorrectionMode,
) -> Result<CorrectionFactors> {
    let ck = procedure_correction_sup(spec, k, m, c, delta, mode)?;
    let dk = dependence_correction(regime, mode, k as u64, c, delta);
    let b = effective_upper_argument(spec, k, m, c)?;
    Ok(CorrectionFactors {
        ck,
        dk,
        b,
        regime,
        mode,
    })
}

/// Divide every critical value by `ck * dk`, recording both factors in the
/// provenance.
pub fn corrected_schedule(base: &CriticalSchedule, ck: f64, dk: f64) -> Result<CriticalSchedule> {
    if !(ck > 0.0 && ck.is_finite() && dk > 0.0 && dk.is_finite()) {
        return Err(Error::Domain(format!(
            "correction factors ck = {ck}, dk = {dk} must be positive and finite"
        )));
    }
    let divisor = ck * dk;
    let values: Vec<f64> = base.values().iter().map(|&v| v / divisor).collect();
    if values[0] == 0.0 {
        return Err(Error::Schedule(
            "corrected first critical value underflowed to 0".into(),
        ));
    }
    let mut meta = base.meta().clone();
    meta.corrections = Some((ck, dk));
    CriticalSchedule::from_values(values, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::deterministic_schedule;

    fn spec(family: GeneratorFamily, alpha: f64, lambda: f64, m: usize) -> GeneratorSpec {
        GeneratorSpec::new(family, alpha, lambda, m).unwrap()
    }

    #[test]
    fn harmonic_golden_values() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert_eq!(harmonic(2), 1.5);
        assert!((harmonic(20) - 3.5977396571436819).abs() < 1e-13);
        assert!((harmonic(200) - 5.8780309481214445).abs() < 1e-13);
        assert!((harmonic(500_000) - 13.699580042305528).abs() < 1e-11);
    }

    #[test]
    fn harmonic_expansion_is_continuous_at_the_switch() {
        // direct Kahan sum at the boundary vs the asymptotic form just below it
        let boundary = harmonic(DIRECT_SUM_LIMIT);
        let x = DIRECT_SUM_LIMIT as f64;
        let expansion = x.ln() + EULER_MASCHERONI + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
            + 1.0 / (120.0 * x.powi(4));
        assert!(
            (boundary - expansion).abs() < 1e-12,
            "sum {boundary} vs expansion {expansion}"
        );
    }

    #[test]
    fn harmonic_log_bracket() {
        for k in [1u64, 2, 3, 7, 20, 137, 5000, 999_983] {
            let h = harmonic(k);
            let x = k as f64;
            assert!((x + 1.0).ln() <= h + 1e-12, "lower bracket at k = {k}");
            assert!(h <= 1.0 + x.ln() + 1e-12, "upper bracket at k = {k}");
        }
    }

    #[test]
    fn savings_golden_values() {
        let m = 500_000;
        assert!((truncation_savings(20, m).unwrap() - 0.2626167843).abs() < 1e-9);
        assert!((truncation_savings(100, m).unwrap() - 0.3786523019).abs() < 1e-9);
        assert_eq!(truncation_savings(m, m).unwrap(), 1.0);
        assert!(truncation_savings(0, m).is_err());
        assert!(truncation_savings(m + 1, m).is_err());
    }

    #[test]
    fn savings_asymptotics_for_power_law_truncation() {
        // k = floor(m^gamma): H_k / (gamma H_m + 1 - gamma) -> 1. The gap is
        // a constant, so small gamma needs a larger m to squeeze under 5%.
        for (m, gamma) in [(1e12f64, 0.25), (1e6, 0.5), (1e6, 0.75)] {
            let k = m.powf(gamma).floor() as u64;
            let ratio = harmonic(k) / (gamma * harmonic(m as u64) + (1.0 - gamma));
            assert!(
                (ratio - 1.0).abs() <= 0.05,
                "m = {m}, gamma = {gamma}: ratio = {ratio}"
            );
        }
        // convergence direction: the ratio rises towards 1 as m grows
        let gamma = 0.25;
        let r6 = harmonic(31) / (gamma * harmonic(1_000_000) + 0.75);
        let r12 = harmonic(1000) / (gamma * harmonic(1_000_000_000_000) + 0.75);
        assert!(r6 < r12 && r12 < 1.0);
    }

    #[test]
    fn table_corrections() {
        assert_eq!(
            procedure_correction_table(GeneratorFamily::Linear, 17, 300, 0.7, 0.05, 0.5).unwrap(),
            1.0
        );
        let w2 =
            procedure_correction_table(GeneratorFamily::Aorc, 100, 10_000, 1.0, 0.05, 1.0).unwrap();
        assert!((w2 - 1.0095911155981827).abs() < 1e-14);
        let w4 =
            procedure_correction_table(GeneratorFamily::TemperedAorc, 100, 100, 1.0, 0.05, 0.5)
                .unwrap();
        assert!((w4 - 10.0).abs() < 1e-12); // min(0.5/0.05, 20) at B = 1
        assert!(procedure_correction_table(GeneratorFamily::Aorc, 30, 20, 1.0, 0.05, 1.0).is_err());
    }

    #[test]
    fn sup_correction_linear_is_exactly_one() {
        for (k, m, c, delta) in [
            (1usize, 10usize, 1.0, 1.0),
            (5, 50, 0.8, 0.9),
            (50, 50, 0.5, 1.0),
        ] {
            let s = spec(GeneratorFamily::Linear, 0.05, 1.0, m);
            for mode in [CorrectionMode::Deterministic, CorrectionMode::Adaptive] {
                let ck = procedure_correction_sup(&s, k, m, c, delta, mode).unwrap();
                assert_eq!(ck, 1.0, "k={k} m={m} mode={mode:?}");
            }
        }
    }

    #[test]
    fn sup_matches_table_when_cap_does_not_bind() {
        // AORC, adaptive: B = k/(c m) with lambda = 1 never capped
        let s = spec(GeneratorFamily::Aorc, 0.05, 1.0, 10_000);
        let sup =
            procedure_correction_sup(&s, 100, 10_000, 1.0, 1.0, CorrectionMode::Adaptive).unwrap();
        let table =
            procedure_correction_table(GeneratorFamily::Aorc, 100, 10_000, 1.0, 0.05, 1.0).unwrap();
        assert!((sup - table).abs() < 1e-13);

        // Blanchard-Roquain, deterministic, lambda high enough that the cap
        // stays out of reach on [0, 1]
        let s = spec(GeneratorFamily::BlanchardRoquain, 0.05, 0.9, 100);
        let sup = procedure_correction_sup(&s, 100, 100, 1.0, 1.0, CorrectionMode::Deterministic)
            .unwrap();
        let table =
            procedure_correction_table(GeneratorFamily::BlanchardRoquain, 100, 100, 1.0, 0.05, 0.9)
                .unwrap();
        assert!((sup - table).abs() < 1e-13, "sup {sup} vs table {table}");
    }

    #[test]
    fn sup_respects_cap_peak() {
        // tempered AORC with lambda = 0.3: cap point 0.9375, so at B = 1 the
        // true supremum of g(t)/t sits at the cap point, not the endpoint
        let s = spec(GeneratorFamily::TemperedAorc, 0.05, 0.3, 100);
        let sup =
            procedure_correction_sup(&s, 100, 100, 1.0, 1.0, CorrectionMode::Adaptive).unwrap();
        let at_cap = s.eval(0.9375).unwrap() / 0.9375 / 0.05;
        assert!((sup - at_cap).abs() < 1e-12);
        let at_endpoint = s.eval(1.0).unwrap() / 1.0 / 0.05;
        assert!(sup > at_endpoint);
    }

    #[test]
    fn dependence_table_values() {
        use CorrectionMode::*;
        use DependenceRegime::*;
        assert_eq!(
            dependence_correction(Independent, Deterministic, 20, 1.0, 1.0),
            1.0
        );
        let dep_det = dependence_correction(Arbitrary, Deterministic, 20, 1.0, 1.0);
        assert!((dep_det - 3.5977396571436819).abs() < 1e-13);
        assert!((dependence_correction(Independent, Adaptive, 20, 0.8, 1.0) - 1.25).abs() < 1e-15);
        let dep_ad = dependence_correction(Arbitrary, Adaptive, 20, 1.0, 1.0);
        assert!((dep_ad - 21f64.ln()).abs() < 1e-15);
        assert!((dep_ad - 3.0445224377234230).abs() < 1e-12);
    }

    #[test]
    fn corrected_linear_schedule_is_truncated_bh_exactly() {
        let m = 100;
        let k = 20;
        let s = spec(GeneratorFamily::Linear, 0.05, 1.0, m);
        let base = deterministic_schedule(&s, m, k).unwrap();
        let ck =
            procedure_correction_sup(&s, k, m, 1.0, 1.0, CorrectionMode::Deterministic).unwrap();
        let dk = dependence_correction(
            DependenceRegime::Arbitrary,
            CorrectionMode::Deterministic,
            k as u64,
            1.0,
            1.0,
        );
        let corrected = corrected_schedule(&base, ck, dk).unwrap();
        let reference = crate::schedules::truncated_bh_schedule(m, k, 0.05).unwrap();
        assert_eq!(corrected.values(), reference.values());
        assert_eq!(corrected.meta().corrections, Some((1.0, harmonic(20))));
    }

    #[test]
    fn unit_factors_leave_schedule_unchanged() {
        let s = spec(GeneratorFamily::Linear, 0.05, 1.0, 10);
        let base = deterministic_schedule(&s, 10, 10).unwrap();
        let same = corrected_schedule(&base, 1.0, 1.0).unwrap();
        assert_eq!(base.values(), same.values());
    }

    #[test]
    fn aorc_divisor_product() {
        // divide by 1.0095911 * H_100 = 5.2371261...
        let m = 10_000;
        let k = 100;
        let s = spec(GeneratorFamily::Aorc, 0.05, 1.0, m);
        let ck =
            procedure_correction_sup(&s, k, m, 1.0, 1.0, CorrectionMode::Deterministic).unwrap();
        let dk = dependence_correction(
            DependenceRegime::Arbitrary,
            CorrectionMode::Deterministic,
            k as u64,
            1.0,
            1.0,
        );
        assert!((ck * dk - 1.0095911155981827 * 5.1873775176396203).abs() < 1e-10);
    }

    #[test]
    fn corrected_schedule_rejects_bad_factors() {
        let s = spec(GeneratorFamily::Linear, 0.05, 1.0, 4);
        let base = deterministic_schedule(&s, 4, 4).unwrap();
        assert!(corrected_schedule(&base, 0.0, 1.0).is_err());
        assert!(corrected_schedule(&base, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn corrected_schedule_preserves_structure() {
        let s = spec(GeneratorFamily::TemperedAorc, 0.05, 0.5, 50);
        let base = deterministic_schedule(&s, 50, 10).unwrap();
        let corrected = corrected_schedule(&base, 2.0, 3.0).unwrap();
        assert_eq!(corrected.meta().truncation, Some(10));
        for (c, b) in corrected.values().iter().zip(base.values()) {
            assert!((c * 6.0 - b).abs() < 1e-15);
        }
    }

    #[test]
    fn scale_invariance_of_corrected_values_at_lambda_one() {
        // Scaling the generator by any constant scales the schedule and the
        // sup-correction identically, so corrected values are unchanged.
        // Exercised at the formula level over a scaled linear-family curve.
        let (m, k, alpha) = (200usize, 40usize, 0.05);
        let base = spec(GeneratorFamily::Linear, alpha, 1.0, m);
        let dk = dependence_correction(
            DependenceRegime::Arbitrary,
            CorrectionMode::Deterministic,
            k as u64,
            1.0,
            1.0,
        );
        let mut reference: Option<Vec<f64>> = None;
        for scale in [1.0f64, 0.5, 2.0, 7.3] {
            let g = |x: f64| scale * base.eval_extended(x);
            let b = (k as f64 / m as f64).min(1.0); // g^{-1}(1) = 1 while scale*g(B) < 1
            let j_max = (m as f64 * b).floor() as usize;
            let ck = (1..=j_max)
                .map(|j| g(j as f64 / m as f64) / (j as f64 / m as f64))
                .fold(f64::NEG_INFINITY, f64::max)
                / alpha;
            let corrected: Vec<f64> = (1..=m)
                .map(|j| g(j.min(k) as f64 / m as f64) / (ck * dk))
                .collect();
            match &reference {
                None => reference = Some(corrected),
                Some(r) => {
                    for (a, b) in corrected.iter().zip(r) {
                        assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0), "scale = {scale}");
                    }
                }
            }
        }
    }
}
