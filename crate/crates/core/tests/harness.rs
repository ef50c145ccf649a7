//! Monte-Carlo dominance checks beyond the acceptance list: every bound
//! that claims applicability must dominate the simulated error rate.

use fdr_control::sim::{procedures, run_mc, Scenario, ScenarioModel};

fn binomial_se(p_hat: f64, n: u32) -> f64 {
    (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

#[test]
fn bonferroni_controls_fwer_everywhere() {
    let alpha = 0.05;
    let scenarios = [
        ScenarioModel::Independent { effect: 0.1 },
        ScenarioModel::ExtremeDependence,
        ScenarioModel::Equicorrelated {
            rho: 0.5,
            effect: 2.0,
        },
    ];
    for (i, model) in scenarios.into_iter().enumerate() {
        let scenario = Scenario {
            model,
            m: 100,
            m0: 80,
            replications: 40_000,
            seed: 7000 + i as u64,
        };
        let summary = run_mc(&scenario, procedures::bonferroni(alpha)).unwrap();
        let budget = alpha + 3.0 * binomial_se(summary.fwer_hat, scenario.replications);
        assert!(
            summary.fwer_hat <= budget,
            "{model:?}: fwer_hat = {} exceeds {budget}",
            summary.fwer_hat
        );
    }
}

#[test]
fn corrected_schedules_dominate_under_factor_dependence() {
    // one-factor Gaussian dependence: the truncated schedules must stay
    // below (m0/m) alpha just as in the coupled worst case
    let scenario = Scenario {
        model: ScenarioModel::Equicorrelated {
            rho: 0.5,
            effect: 2.5,
        },
        m: 100,
        m0: 80,
        replications: 40_000,
        seed: 7100,
    };
    let bound = 0.8 * 0.05;
    for k in [1usize, 5, 20, 100] {
        let summary = run_mc(&scenario, procedures::truncated_bh(k, 0.05)).unwrap();
        assert!(
            summary.fdr_hat <= bound + 3.0 * summary.fdr_se,
            "k = {k}: fdr_hat = {} (se {})",
            summary.fdr_hat,
            summary.fdr_se
        );
    }
}

#[test]
fn corrected_early_stop_dominates_under_extreme_dependence() {
    let scenario = Scenario {
        model: ScenarioModel::ExtremeDependence,
        m: 100,
        m0: 90,
        replications: 40_000,
        seed: 7200,
    };
    let bound = 0.9 * 0.05;
    for (kappa, k) in [(5usize, 5usize), (10, 20), (20, 20)] {
        let summary = run_mc(&scenario, procedures::early_stop_corrected(kappa, k, 0.05)).unwrap();
        assert!(
            summary.fdr_hat <= bound + 3.0 * summary.fdr_se,
            "kappa = {kappa}, k = {k}: fdr_hat = {}",
            summary.fdr_hat
        );
    }
}

#[test]
fn early_stop_bi_control_matches_level() {
    // uncapped early stopping keeps the independence-model FDR at or below
    // (m0/m) alpha
    let scenario = Scenario {
        model: ScenarioModel::Independent { effect: 0.1 },
        m: 100,
        m0: 80,
        replications: 40_000,
        seed: 7300,
    };
    for kappa in [5usize, 20, 50] {
        let summary = run_mc(&scenario, procedures::early_stop(kappa, 0.05)).unwrap();
        assert!(
            summary.fdr_hat <= 0.04 + 3.0 * summary.fdr_se,
            "kappa = {kappa}: fdr_hat = {}",
            summary.fdr_hat
        );
    }
}
