//! FDR upper bounds and exact FDR formulas, each reported together with an
//! applicability verdict and the numeric margin of its side condition.

use crate::corrections::{harmonic, HarmonicAccumulator};
use crate::error::{Error, Result};
use crate::schedules::{GeneratorFamily, GeneratorSpec};

/// A bound (or exact value) plus the status of its side condition.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Stable identifier of the bound, e.g. "bi-linear-exact".
    pub source: &'static str,
    /// The bound value; reported even when not applicable.
    pub value: f64,
    pub applicable: bool,
    /// Slack in the side condition (negative when violated, +inf when the
    /// bound carries no condition).
    pub margin: f64,
    pub condition: String,
}

fn fraction(m0: usize, m: usize) -> f64 {
    assert!(m >= 1 && m0 <= m, "need 0 <= m0 <= m with m >= 1");
    m0 as f64 / m as f64
}

/// Exact FDR of the plain linear step-up rule under the independence model:
/// `(m0/m) alpha` (an identity, not just a bound).
pub fn fdr_bi_linear(m0: usize, m: usize, alpha: f64) -> BoundReport {
    BoundReport {
        source: "bi-linear-exact",
        value: fraction(m0, m) * alpha,
        applicable: true,
        margin: f64::INFINITY,
        condition: "independence model; exact equality".into(),
    }
}

/// Worst-case FDR of the plain linear rule under arbitrary dependence:
/// `(m0/m) alpha H_m`.
pub fn fdr_bound_dependence_linear(m0: usize, m: usize, alpha: f64) -> BoundReport {
    BoundReport {
        source: "dependence-linear-harmonic",
        value: fraction(m0, m) * alpha * harmonic(m as u64),
        applicable: true,
        margin: f64::INFINITY,
        condition: "arbitrary dependence; harmonic correction factor".into(),
    }
}

/// FDR control of the tempered AORC under independence: level `alpha`,
/// valid when `lambda` and `m` clear the feasibility thresholds.
pub fn fdr_bound_tempered_aorc_bi(m: usize, alpha: f64, lambda: f64) -> BoundReport {
    let m_f = m as f64;
    let lambda_lo = if m >= 2 {
        alpha / (m_f - 1.0)
    } else {
        f64::INFINITY
    };
    let m_lo_curve = (1.0 - alpha) / (alpha - alpha * alpha / 4.0);
    let m_lo_lambda = (1.0 - lambda) * lambda / alpha;
    let margins = [
        lambda - lambda_lo,
        1.0 - lambda,
        m_f - m_lo_curve,
        m_f - m_lo_lambda,
    ];
    let margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    BoundReport {
        source: "tempered-aorc-bi",
        value: alpha,
        applicable: margin > 0.0,
        margin,
        condition: format!(
            "lambda in ({lambda_lo}, 1), m >= {m_lo_curve:.3}, m >= {m_lo_lambda:.3}"
        ),
    }
}

/// Whether the null-count estimate behind an adaptive schedule may look at
/// the whole sample or only at the p-values above the tuning point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateMode {
    Deterministic,
    Adaptive {
        c: f64,
        /// Certified to depend only on p-values at or above lambda
        /// (see [`crate::estimators::storey_restricted`]).
        restricted: bool,
    },
}

/// Independence bound for truncated generator schedules:
/// `(m0/m) alpha ck` deterministically, `(m0/m) alpha ck / c` adaptively.
/// The adaptive branch requires a restricted estimator.
pub fn fdr_bound_truncated_bi(
    m0: usize,
    m: usize,
    mode: EstimateMode,
    ck: f64,
    alpha: f64,
) -> BoundReport {
    let base = fraction(m0, m) * alpha * ck;
    match mode {
        EstimateMode::Deterministic => BoundReport {
            source: "bi-truncated-det",
            value: base,
            applicable: true,
            margin: f64::INFINITY,
            condition: "deterministic schedule".into(),
        },
        EstimateMode::Adaptive { c, restricted } => BoundReport {
            source: "bi-truncated-adaptive",
            value: base / c,
            applicable: restricted,
            margin: if restricted {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            condition: if restricted {
                "estimator restricted to p-values above the tuning point".into()
            } else {
                "estimator uses information below the tuning point; bound unavailable".into()
            },
        },
    }
}

fn capped_eval(spec: &GeneratorSpec, x: f64) -> f64 {
    spec.eval_extended(x).min(spec.lambda())
}

/// Total mass of the discrete measure representing a deterministic
/// truncated schedule: `sum_{1 <= j <= mB} m (g(j/m) - g((j-1)/m)) / j`.
/// For the linear family this telescopes to `alpha H_{floor(mB)}`.
pub fn representing_mass_det(spec: &GeneratorSpec, m: usize, k: usize, c: f64) -> Result<f64> {
    let b = crate::corrections::effective_upper_argument(spec, k, m, c)?;
    let m_f = m as f64;
    let j_max = (m_f * b).floor() as usize;
    let mut mass = 0.0;
    let mut prev = 0.0;
    for j in 1..=j_max {
        let g_j = capped_eval(spec, j as f64 / m_f);
        mass += m_f * (g_j - prev) / j as f64;
        prev = g_j;
    }
    Ok(mass)
}

/// Dependence bound for deterministic truncated schedules, in both its
/// closed harmonic form and the sharper representing-mass form.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDependenceBound {
    /// Closed-form bound `(m0/m) alpha H_{floor(mB)} ck`; applicability is
    /// decided by the representing mass staying below 1.
    pub report: BoundReport,
    /// The sharper value `(m0/m) * mass`.
    pub sharper_value: f64,
    /// Total representing mass of the schedule.
    pub mass: f64,
    /// The side condition in its literal harmonic-times-correction form
    /// `H_{floor(mB)} ck`, reported for reference; it omits the alpha factor
    /// and is stricter than the mass condition actually enforced.
    pub literal_condition: f64,
}

pub fn fdr_bound_truncated_dependence_det(
    m0: usize,
    m: usize,
    spec: &GeneratorSpec,
    k: usize,
) -> Result<TruncatedDependenceBound> {
    let alpha = spec.alpha();
    let ck = crate::corrections::procedure_correction_sup(
        spec,
        k,
        m,
        1.0,
        1.0,
        crate::corrections::CorrectionMode::Deterministic,
    )?;
    let b = crate::corrections::effective_upper_argument(spec, k, m, 1.0)?;
    let j_max = ((m as f64) * b).floor() as u64;
    let harmonic_sum = harmonic(j_max);
    let mass = representing_mass_det(spec, m, k, 1.0)?;
    let value = fraction(m0, m) * alpha * harmonic_sum * ck;
    let report = BoundReport {
        source: "dependence-truncated-det",
        value,
        applicable: mass < 1.0,
        margin: 1.0 - mass,
        condition: format!("representing mass {mass} < 1"),
    };
    Ok(TruncatedDependenceBound {
        report,
        sharper_value: fraction(m0, m) * mass,
        mass,
        literal_condition: harmonic_sum * ck,
    })
}

/// Adaptive Simpson quadrature with absolute-error target `tol`.
fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), mid, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        mid: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let (left, lmid, flm) = simpson(f, a, fa, mid, fm);
        let (right, rmid, frm) = simpson(f, mid, fm, b, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Internal(format!(
                "quadrature failed to converge on [{a}, {b}]"
            )));
        }
        let half = tol / 2.0;
        Ok(
            recurse(f, a, fa, mid, fm, left, lmid, flm, half, depth - 1)?
                + recurse(f, mid, fm, b, fb, right, rmid, frm, half, depth - 1)?,
        )
    }
    if !(b > a) {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, mid, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, mid, fm, tol, 48)
}

const QUADRATURE_TOL: f64 = 1e-10;

/// Density of the absolutely continuous part: the uncapped-branch
/// derivative `h'(x)`, valid below the cap point.
fn uncapped_derivative(spec: &GeneratorSpec, x: f64) -> f64 {
    let alpha = spec.alpha();
    let lambda = spec.lambda();
    match spec.family() {
        GeneratorFamily::Linear => alpha,
        GeneratorFamily::Aorc => {
            let d = (1.0 - x) + x * alpha;
            alpha / (d * d)
        }
        GeneratorFamily::BlanchardRoquain => {
            let one_plus = 1.0 + 1.0 / spec.m() as f64;
            let d = one_plus - x;
            (1.0 - lambda) * alpha * one_plus / (d * d)
        }
        GeneratorFamily::TemperedAorc => {
            let d = (1.0 - x) + x * alpha;
            (1.0 - lambda) * alpha / (d * d)
        }
    }
}

/// Quadrature evaluation of the adaptive representing mass; exposed so the
/// closed forms can be validated against an independent route.
pub(crate) fn representing_mass_adaptive_quadrature(
    spec: &GeneratorSpec,
    m: usize,
    k: usize,
    c: f64,
    delta: f64,
) -> Result<f64> {
    let m_f = m as f64;
    let b = crate::corrections::effective_upper_argument(spec, k, m, c)?;
    let boundary = (m_f / delta) * capped_eval(spec, delta / m_f);
    // the derivative vanishes once the cap binds
    let upper = (m_f * b).min(m_f * spec.cap_point());
    let integrand = move |z: f64| uncapped_derivative(spec, z / m_f) / z;
    let integral = simpson_adaptive(&integrand, delta, upper, QUADRATURE_TOL)?;
    Ok(boundary + integral)
}

/// Total mass of the measure representing an adaptive schedule:
/// `(m/delta) g(delta/m) + int_delta^{mB} g'(z/m)/z dz`.
///
/// Closed forms cover the linear and AORC families; the capped families go
/// through adaptive quadrature.
pub fn representing_mass_adaptive(
    spec: &GeneratorSpec,
    m: usize,
    k: usize,
    c: f64,
    delta: f64,
) -> Result<f64> {
    let m_f = m as f64;
    let b = crate::corrections::effective_upper_argument(spec, k, m, c)?;
    let alpha = spec.alpha();
    match spec.family() {
        GeneratorFamily::Linear => {
            if m_f * b <= delta {
                return Ok((m_f / delta) * capped_eval(spec, delta / m_f));
            }
            Ok(alpha * (1.0 + (m_f * b / delta).ln()))
        }
        GeneratorFamily::Aorc => {
            let u0 = delta / m_f;
            if b <= u0 {
                return Ok((m_f / delta) * capped_eval(spec, u0));
            }
            let cc = 1.0 - alpha;
            let antiderivative = |u: f64| u.ln() - (1.0 - cc * u).ln() + 1.0 / (1.0 - cc * u);
            let boundary = alpha / (1.0 - u0 * cc);
            Ok(boundary + alpha * (antiderivative(b) - antiderivative(u0)))
        }
        GeneratorFamily::BlanchardRoquain | GeneratorFamily::TemperedAorc => {
            representing_mass_adaptive_quadrature(spec, m, k, c, delta)
        }
    }
}

/// Dependence bound for adaptive truncated schedules:
/// `(m0/m) alpha (1/c) (1 + log(mB/delta)) ck_ad`, applicable while the
/// adaptive representing mass stays below 1.
pub fn fdr_bound_truncated_dependence_adaptive(
    m0: usize,
    m: usize,
    spec: &GeneratorSpec,
    k: usize,
    c: f64,
    delta: f64,
) -> Result<BoundReport> {
    let alpha = spec.alpha();
    let ck = crate::corrections::procedure_correction_sup(
        spec,
        k,
        m,
        c,
        delta,
        crate::corrections::CorrectionMode::Adaptive,
    )?;
    let b = crate::corrections::effective_upper_argument(spec, k, m, c)?;
    let log_term = (m as f64 * b / delta).ln().max(0.0);
    let value = fraction(m0, m) * alpha * (1.0 + log_term) * ck / c;
    match representing_mass_adaptive(spec, m, k, c, delta) {
        Ok(mass) => Ok(BoundReport {
            source: "dependence-truncated-adaptive",
            value,
            applicable: mass < 1.0,
            margin: 1.0 - mass,
            condition: format!("adaptive representing mass {mass} < 1"),
        }),
        Err(Error::Internal(diag)) => Ok(BoundReport {
            source: "dependence-truncated-adaptive",
            value,
            applicable: false,
            margin: f64::NEG_INFINITY,
            condition: format!("condition could not be evaluated: {diag}"),
        }),
        Err(other) => Err(other),
    }
}

/// Upper FDR bound assembled from per-null marginal rejection
/// probabilities `P(p_i <= a_{j:m})`, `j = 1..k`, in its two algebraically
/// equal forms. Construction fails if the forms drift apart numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalBound {
    /// `sum_i [ P_i(k)/k + sum_{j<k} P_i(j)/(j(j+1)) ]`.
    pub direct: f64,
    /// Telescoped form `sum_i sum_j (P_i(j) - P_i(j-1))/j`.
    pub telescoped: f64,
}

impl MarginalBound {
    pub fn value(&self) -> f64 {
        self.direct
    }
}

const MARGINAL_FORM_TOL: f64 = 1e-12;

/// Evaluate the marginal-decomposition FDR bound for a truncated step-up
/// procedure. Each row holds one null hypothesis' marginals, non-decreasing
/// in the rank.
pub fn marginal_decomposition_bound(marginals: &[Vec<f64>]) -> Result<MarginalBound> {
    let k = match marginals.first() {
        Some(row) => row.len(),
        None => return Err(Error::Domain("no marginal rows supplied".into())),
    };
    if k == 0 {
        return Err(Error::Domain("marginal rows must be non-empty".into()));
    }
    for (i, row) in marginals.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Domain(format!(
                "marginal row {i} has length {} instead of {k}",
                row.len()
            )));
        }
        let mut prev = 0.0;
        for (j, &p) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!(
                    "marginal ({i}, {j}) = {p} outside [0, 1]"
                )));
            }
            if p < prev {
                return Err(Error::Domain(format!(
                    "marginals must be non-decreasing; row {i} drops at rank {}",
                    j + 1
                )));
            }
            prev = p;
        }
    }
    let mut direct = 0.0;
    let mut telescoped = 0.0;
    for row in marginals {
        direct += row[k - 1] / k as f64;
        for j in 1..k {
            direct += row[j - 1] / (j as f64 * (j as f64 + 1.0));
        }
        let mut prev = 0.0;
        for (j, &p) in row.iter().enumerate() {
            telescoped += (p - prev) / (j as f64 + 1.0);
            prev = p;
        }
    }
    if (direct - telescoped).abs() > MARGINAL_FORM_TOL {
        return Err(Error::Internal(format!(
            "marginal bound forms disagree: {direct} vs {telescoped}"
        )));
    }
    Ok(MarginalBound { direct, telescoped })
}

/// Normalizer of the sparsity schedule:
/// `a_k = 1/H_k + sum_{j=1}^{k-1} 1/((j+1) H_j)`; grows like log log k.
pub fn sparsity_normalizer(k: u64) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let mut acc = HarmonicAccumulator::new();
    let mut tail = 0.0;
    let mut h = 0.0;
    for j in 1..=k {
        h = acc.push();
        if j < k {
            tail += 1.0 / ((j + 1) as f64 * h);
        }
    }
    1.0 / h + tail
}

/// Two-sided enclosure of the sparsity normalizer, valid from k = 4 on.
pub fn sparsity_normalizer_bracket(k: u64) -> Result<(f64, f64)> {
    if k < 4 {
        return Err(Error::Domain(format!("bracket needs k >= 4, got {k}")));
    }
    let k_f = k as f64;
    let lower = (1.0 + (k_f + 1.0).ln()).ln() - (1.0 + 3f64.ln()).ln() + 1.0 / (1.0 + k_f.ln());
    let upper = 13.0 / 18.0 + k_f.ln().ln() + 1.0 / (k_f + 1.0).ln();
    Ok((lower, upper))
}

/// Sparsity-regime dispatch for [`fdr_bound_sparsity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsityRegime {
    Independent,
    Arbitrary,
}

/// FDR bound of the sparsity schedule: `(m0/m) alpha / a_k` under
/// independence and `(m0/m) alpha` under arbitrary dependence.
pub fn fdr_bound_sparsity(
    m0: usize,
    m: usize,
    k: usize,
    alpha: f64,
    regime: SparsityRegime,
) -> BoundReport {
    assert!(k >= 1 && k <= m, "k must lie in 1..=m");
    match regime {
        SparsityRegime::Independent => BoundReport {
            source: "sparsity-bi",
            value: fraction(m0, m) * alpha / sparsity_normalizer(k as u64),
            applicable: true,
            margin: f64::INFINITY,
            condition: "independence model".into(),
        },
        SparsityRegime::Arbitrary => BoundReport {
            source: "sparsity-dependence",
            value: fraction(m0, m) * alpha,
            applicable: true,
            margin: f64::INFINITY,
            condition: "arbitrary dependence".into(),
        },
    }
}

/// Closed-form FDR of the fully coupled configuration (all null p-values
/// equal to one uniform draw, all false ones zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtremeVariant {
    /// Unclamped Storey plug-in.
    Storey,
    /// Storey with the lower clamp at `c m`.
    Clamped { c: f64 },
}

pub fn extreme_dependence_fdr(
    m0: usize,
    m: usize,
    alpha: f64,
    lambda: f64,
    variant: ExtremeVariant,
) -> BoundReport {
    let frac = fraction(m0, m);
    match variant {
        ExtremeVariant::Storey => {
            let cutoff = alpha * m as f64 * (1.0 - alpha);
            let saturated = cutoff >= lambda;
            BoundReport {
                source: "extreme-storey",
                value: frac * cutoff.min(lambda),
                applicable: true,
                margin: f64::INFINITY,
                condition: if saturated {
                    format!("exact FDR; saturated at (m0/m) lambda since {cutoff} >= {lambda}")
                } else {
                    "exact FDR".into()
                },
            }
        }
        ExtremeVariant::Clamped { c } => {
            let margin = c * m as f64 - 1.0 / (1.0 - lambda);
            BoundReport {
                source: "extreme-clamped",
                value: frac * (alpha / c).min(lambda),
                applicable: margin >= 0.0,
                margin,
                condition: format!("requires c m >= 1/(1 - lambda) = {}", 1.0 / (1.0 - lambda)),
            }
        }
    }
}
