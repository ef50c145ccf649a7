//! Monte-Carlo scenario sampling and estimation of FDR, FWER, power and
//! mean rejection counts.
//!
//! Reproducibility contract: replication `r` of a run seeded with `s` draws
//! from a ChaCha12 stream with seed `s` and stream id `r`, so results are
//! identical no matter how replications are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::normal::standard_normal_cdf;
use crate::pvalues::{GroundTruth, PValueSet};
use crate::stepup::RejectionResult;

/// Joint law of the sampled p-values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioModel {
    /// Nulls i.i.d. uniform, alternatives i.i.d. Beta(effect, 1); all
    /// mutually independent. `effect < 1` pushes alternatives towards 0.
    Independent { effect: f64 },
    /// All null p-values equal to a single uniform draw, all alternatives
    /// exactly zero — the fully coupled worst case.
    ExtremeDependence,
    /// Gaussian one-factor model `z_i = sqrt(rho) z0 + sqrt(1-rho) xi_i +
    /// effect * 1{false}` with `p_i = 1 - Phi(z_i)`; a stress model sitting
    /// between independence and full coupling.
    Equicorrelated { rho: f64, effect: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub model: ScenarioModel,
    pub m: usize,
    pub m0: usize,
    pub replications: u32,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be positive".into()));
        }
        if self.m0 > self.m {
            return Err(Error::Config(format!(
                "m0 = {} exceeds m = {}",
                self.m0, self.m
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("need at least one replication".into()));
        }
        match self.model {
            ScenarioModel::Independent { effect } => {
                if !(effect > 0.0) {
                    return Err(Error::Config(format!("effect = {effect} must be positive")));
                }
            }
            ScenarioModel::ExtremeDependence => {}
            ScenarioModel::Equicorrelated { rho, .. } => {
                if !(0.0..1.0).contains(&rho) {
                    return Err(Error::Config(format!("rho = {rho} outside [0, 1)")));
                }
            }
        }
        Ok(())
    }
}

/// The RNG stream for one replication.
pub fn replication_rng(seed: u64, replication: u32) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

/// Draw one data set from the scenario's model. Nulls occupy the leading
/// `m0` positions.
pub fn sample_scenario(scenario: &Scenario, rng: &mut ChaCha12Rng) -> (PValueSet, GroundTruth) {
    match scenario.model {
        ScenarioModel::Independent { effect } => {
            sample_independent(scenario.m, scenario.m0, effect, rng)
        }
        ScenarioModel::ExtremeDependence => sample_extreme(scenario.m, scenario.m0, rng),
        ScenarioModel::Equicorrelated { rho, effect } => {
            sample_equicorrelated(scenario.m, scenario.m0, rho, effect, rng)
        }
    }
}

/// Independence model: uniforms for nulls, Beta(effect, 1) for
/// alternatives (inverse-transform `u^(1/effect)`).
pub fn sample_independent(
    m: usize,
    m0: usize,
    effect: f64,
    rng: &mut impl Rng,
) -> (PValueSet, GroundTruth) {
    let inv_effect = 1.0 / effect;
    let values: Vec<f64> = (0..m)
        .map(|i| {
            let u: f64 = rng.random();
            if i < m0 {
                u
            } else {
                u.powf(inv_effect)
            }
        })
        .collect();
    finish(values, m, m0)
}

/// Fully coupled model: one uniform shared by every null, zeros for the
/// alternatives.
pub fn sample_extreme(m: usize, m0: usize, rng: &mut impl Rng) -> (PValueSet, GroundTruth) {
    let u: f64 = rng.random();
    let values: Vec<f64> = (0..m).map(|i| if i < m0 { u } else { 0.0 }).collect();
    finish(values, m, m0)
}

/// Gaussian one-factor model with one-sided p-values.
pub fn sample_equicorrelated(
    m: usize,
    m0: usize,
    rho: f64,
    effect: f64,
    rng: &mut impl Rng,
) -> (PValueSet, GroundTruth) {
    let shared = rho.sqrt();
    let idio = (1.0 - rho).sqrt();
    let z0: f64 = StandardNormal.sample(rng);
    let values: Vec<f64> = (0..m)
        .map(|i| {
            let xi: f64 = StandardNormal.sample(rng);
            let shift = if i < m0 { 0.0 } else { effect };
            let z = shared * z0 + idio * xi + shift;
            standard_normal_cdf(-z)
        })
        .collect();
    finish(values, m, m0)
}

fn finish(values: Vec<f64>, m: usize, m0: usize) -> (PValueSet, GroundTruth) {
    let p = PValueSet::new(values).expect("sampled p-values lie in [0, 1] by construction");
    let truth = GroundTruth::nulls_first(m, m0).expect("m0 <= m checked by the scenario");
    (p, truth)
}

/// Monte-Carlo estimates with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSummary {
    /// Mean false-discovery proportion V/R (0/0 read as 0).
    pub fdr_hat: f64,
    /// Standard error of `fdr_hat` (NaN with a single replication).
    pub fdr_se: f64,
    /// Fraction of replications with at least one false rejection.
    pub fwer_hat: f64,
    /// Mean fraction of false hypotheses rejected (0 when there are none).
    pub power_hat: f64,
    pub mean_r: f64,
    pub replications: u32,
}

struct RepStat {
    fdp: f64,
    any_false: bool,
    power: f64,
    r: usize,
}

/// Pairwise summation: deterministic, order-stable and accurate enough for
/// millions of replications.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Run the procedure over every sampled replication and reduce to summary
/// statistics. The reduction consumes per-replication values in replication
/// order, so the summary does not depend on the rayon worker count.
pub fn run_mc<F>(scenario: &Scenario, procedure: F) -> Result<SimulationSummary>
where
    F: Fn(&PValueSet) -> Result<RejectionResult> + Sync,
{
    scenario.validate()?;
    let stats: Vec<RepStat> = (0..scenario.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(scenario.seed, rep);
            let (p, truth) = sample_scenario(scenario, &mut rng);
            let result = procedure(&p)?;
            let r = result.r();
            let v = truth.false_rejections(result.rejected());
            let true_rejections = r - v;
            Ok(RepStat {
                fdp: if r > 0 { v as f64 / r as f64 } else { 0.0 },
                any_false: v > 0,
                power: if truth.m1() > 0 {
                    true_rejections as f64 / truth.m1() as f64
                } else {
                    0.0
                },
                r,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = stats.len() as f64;
    let fdps: Vec<f64> = stats.iter().map(|s| s.fdp).collect();
    let fdr_hat = pairwise_sum(&fdps) / n;
    let fdr_se = if stats.len() > 1 {
        let sq: Vec<f64> = fdps.iter().map(|x| (x - fdr_hat) * (x - fdr_hat)).collect();
        (pairwise_sum(&sq) / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        f64::NAN
    };
    let fwer: Vec<f64> = stats
        .iter()
        .map(|s| if s.any_false { 1.0 } else { 0.0 })
        .collect();
    let powers: Vec<f64> = stats.iter().map(|s| s.power).collect();
    let rs: Vec<f64> = stats.iter().map(|s| s.r as f64).collect();
    Ok(SimulationSummary {
        fdr_hat,
        fdr_se,
        fwer_hat: pairwise_sum(&fwer) / n,
        power_hat: pairwise_sum(&powers) / n,
        mean_r: pairwise_sum(&rs) / n,
        replications: scenario.replications,
    })
}

/// Ready-made procedure closures for the harness and the front end.
pub mod procedures {
    use super::*;
    use crate::estimators::storey_estimate;
    use crate::schedules::{
        bh_schedule, bonferroni_schedule, by_schedule, early_stop_corrected_schedule,
        early_stop_schedule, sparsity_schedule, truncated_bh_schedule, GeneratorFamily,
        GeneratorSpec,
    };
    use crate::stepup::step_up;

    pub type Procedure = Box<dyn Fn(&PValueSet) -> Result<RejectionResult> + Sync + Send>;

    pub fn bh(alpha: f64) -> Procedure {
        Box::new(move |p| step_up(p, &bh_schedule(p.m(), alpha)?))
    }

    pub fn bonferroni(alpha: f64) -> Procedure {
        Box::new(move |p| step_up(p, &bonferroni_schedule(p.m(), alpha)?))
    }

    pub fn by(alpha: f64) -> Procedure {
        Box::new(move |p| step_up(p, &by_schedule(p.m(), alpha)?))
    }

    pub fn truncated_bh(k: usize, alpha: f64) -> Procedure {
        Box::new(move |p| step_up(p, &truncated_bh_schedule(p.m(), k, alpha)?))
    }

    pub fn sparsity(k: usize, alpha: f64) -> Procedure {
        Box::new(move |p| step_up(p, &sparsity_schedule(p.m(), k, alpha)?))
    }

    pub fn early_stop(kappa: usize, alpha: f64) -> Procedure {
        Box::new(move |p| step_up(p, &early_stop_schedule(p, kappa, alpha)?))
    }

    pub fn early_stop_corrected(kappa: usize, k: usize, alpha: f64) -> Procedure {
        Box::new(move |p| step_up(p, &early_stop_corrected_schedule(p, kappa, k, alpha)?))
    }

    /// Storey plug-in without any clamp: values `min(alpha j / m0_hat, lambda)`.
    pub fn storey_bh_unclamped(alpha: f64, lambda: f64) -> Procedure {
        Box::new(move |p| {
            let m0_hat = storey_estimate(p, lambda)?;
            let spec = GeneratorSpec::new(GeneratorFamily::Linear, alpha, lambda, p.m())?;
            let schedule = crate::schedules::plugin_schedule(&spec, p.m(), p.m(), m0_hat)?;
            step_up(p, &schedule)
        })
    }

    /// Storey plug-in with the estimate clamped into `[c m, m/delta]`.
    pub fn storey_bh_clamped(alpha: f64, lambda: f64, c: f64, delta: f64) -> Procedure {
        Box::new(move |p| {
            let raw = storey_estimate(p, lambda)?;
            let m0_hat = crate::estimators::clamp_estimate(raw, p.m(), c, delta)?;
            let spec = GeneratorSpec::new(GeneratorFamily::Linear, alpha, lambda, p.m())?;
            let schedule =
                crate::schedules::adaptive_schedule(&spec, p.m(), p.m(), m0_hat, c, delta)?;
            step_up(p, &schedule)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(model: ScenarioModel, m: usize, m0: usize, reps: u32, seed: u64) -> Scenario {
        Scenario {
            model,
            m,
            m0,
            replications: reps,
            seed,
        }
    }

    #[test]
    fn independent_sampler_basics() {
        let mut rng = replication_rng(7, 0);
        let (p, truth) = sample_independent(50, 50, 0.1, &mut rng);
        assert_eq!(p.m(), 50);
        assert_eq!(truth.m1(), 0);

        // strong signal concentrates alternatives near zero:
        // Beta(0.05, 1) has median 0.5^20 < 0.01
        let mut rng = replication_rng(7, 1);
        let (p, _) = sample_independent(10_000, 0, 0.05, &mut rng);
        let mut sorted: Vec<f64> = p.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        assert!(sorted[5_000] < 0.01, "median {}", sorted[5_000]);
    }

    #[test]
    fn samplers_are_deterministic_per_stream() {
        let mut a = replication_rng(42, 3);
        let mut b = replication_rng(42, 3);
        let (pa, _) = sample_independent(100, 60, 0.1, &mut a);
        let (pb, _) = sample_independent(100, 60, 0.1, &mut b);
        assert_eq!(pa.values(), pb.values());
        let mut c = replication_rng(42, 4);
        let (pc, _) = sample_independent(100, 60, 0.1, &mut c);
        assert_ne!(pa.values(), pc.values());
    }

    #[test]
    fn extreme_sampler_structure() {
        let mut rng = replication_rng(1, 0);
        let (p, _) = sample_extreme(20, 15, &mut rng);
        let nulls: Vec<f64> = p.values()[..15].to_vec();
        assert!(nulls.windows(2).all(|w| w[0] == w[1]));
        assert!(p.values()[15..].iter().all(|&v| v == 0.0));

        let (all_null, _) = sample_extreme(5, 5, &mut rng);
        let first = all_null.values()[0];
        assert!(all_null.values().iter().all(|&v| v == first));

        let (no_null, _) = sample_extreme(5, 0, &mut rng);
        assert!(no_null.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn equicorrelated_extremes() {
        // rho -> 1 with all nulls: values nearly identical
        let mut rng = replication_rng(11, 0);
        let (p, _) = sample_equicorrelated(100, 100, 0.999999, 0.0, &mut rng);
        let lo = p.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo < 1e-2, "range {}", hi - lo);

        // signal shift separates alternative means from null means
        let mut rng = replication_rng(11, 1);
        let (p, truth) = sample_equicorrelated(20_000, 10_000, 0.2, 3.0, &mut rng);
        let null_mean: f64 = p.values()[..truth.m0()].iter().sum::<f64>() / truth.m0() as f64;
        let alt_mean: f64 = p.values()[truth.m0()..].iter().sum::<f64>() / truth.m1() as f64;
        assert!(alt_mean < null_mean);
    }

    #[test]
    fn equicorrelated_rho_zero_is_uniform() {
        // Kolmogorov-Smirnov distance against uniform at n = 1e5,
        // critical value 0.0085 for significance 1e-6
        let mut rng = replication_rng(5, 0);
        let (p, _) = sample_equicorrelated(100_000, 100_000, 0.0, 0.0, &mut rng);
        let mut sorted: Vec<f64> = p.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in sorted.iter().enumerate() {
            let upper = (i as f64 + 1.0) / n - x;
            let lower = x - i as f64 / n;
            d = d.max(upper).max(lower);
        }
        assert!(d < 0.00851723480319, "KS distance {d}");
    }

    #[test]
    fn run_mc_matches_closed_form_fdr() {
        // modest replication count; the acceptance suite runs the full-size check
        let sc = scenario(
            ScenarioModel::Independent { effect: 0.1 },
            100,
            80,
            20_000,
            20240,
        );
        let summary = run_mc(&sc, procedures::bh(0.05)).unwrap();
        assert!(summary.fdr_se > 0.0);
        assert!(
            (summary.fdr_hat - 0.04).abs() <= 3.0 * summary.fdr_se,
            "fdr_hat = {} se = {}",
            summary.fdr_hat,
            summary.fdr_se
        );
        assert!(summary.power_hat > 0.3);
        assert!(summary.mean_r > 0.0);
    }

    #[test]
    fn run_mc_is_reproducible_and_thread_invariant() {
        let sc = scenario(ScenarioModel::Independent { effect: 0.1 }, 50, 40, 500, 99);
        let a = run_mc(&sc, procedures::bh(0.05)).unwrap();
        let b = run_mc(&sc, procedures::bh(0.05)).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_mc(&sc, procedures::bh(0.05)).unwrap());
        assert_eq!(a, single);
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_mc(&sc, procedures::bh(0.05)).unwrap());
        assert_eq!(a, four);
    }

    #[test]
    fn single_replication_reports_nan_se() {
        let sc = scenario(ScenarioModel::ExtremeDependence, 10, 9, 1, 5);
        let summary = run_mc(&sc, procedures::bonferroni(0.05)).unwrap();
        assert!(summary.fdr_se.is_nan());
        assert_eq!(summary.replications, 1);
    }

    #[test]
    fn scenario_validation() {
        assert!(scenario(ScenarioModel::ExtremeDependence, 0, 0, 1, 0)
            .validate()
            .is_err());
        assert!(scenario(ScenarioModel::ExtremeDependence, 5, 6, 1, 0)
            .validate()
            .is_err());
        assert!(scenario(ScenarioModel::ExtremeDependence, 5, 5, 0, 0)
            .validate()
            .is_err());
        assert!(
            scenario(ScenarioModel::Independent { effect: 0.0 }, 5, 5, 1, 0)
                .validate()
                .is_err()
        );
        assert!(scenario(
            ScenarioModel::Equicorrelated {
                rho: 1.0,
                effect: 0.0
            },
            5,
            5,
            1,
            0
        )
        .validate()
        .is_err());
    }

    #[test]
    fn extreme_storey_reproduces_the_violation() {
        // 0.45 at m = 100, m0 = 90, lambda = 0.5 — far above the 0.05 target
        let sc = scenario(ScenarioModel::ExtremeDependence, 100, 90, 20_000, 31337);
        let summary = run_mc(&sc, procedures::storey_bh_unclamped(0.05, 0.5)).unwrap();
        assert!((summary.fdr_hat - 0.45).abs() <= 3.0 * summary.fdr_se);
    }

    #[test]
    fn extreme_clamped_storey_is_repaired() {
        let sc = scenario(ScenarioModel::ExtremeDependence, 100, 90, 20_000, 424242);
        let summary = run_mc(&sc, procedures::storey_bh_clamped(0.05, 0.5, 0.9, 1.0)).unwrap();
        assert!((summary.fdr_hat - 0.05).abs() <= 3.0 * summary.fdr_se);
    }

    #[test]
    fn pairwise_sum_agrees_with_reference() {
        let xs: Vec<f64> = (1..=1001).map(|i| 1.0 / i as f64).collect();
        let kahan = {
            let mut acc = 0.0f64;
            let mut c = 0.0f64;
            for &x in &xs {
                let y = x - c;
                let t = acc + y;
                c = (t - acc) - y;
                acc = t;
            }
            acc
        };
        assert!((pairwise_sum(&xs) - kahan).abs() < 1e-12);
    }
}
