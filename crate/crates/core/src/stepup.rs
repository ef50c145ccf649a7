//! Step-up and step-down evaluation of a critical-value schedule.

use crate::error::{Error, Result};
use crate::pvalues::PValueSet;
use crate::schedules::CriticalSchedule;

/// Direction in which the order statistics are scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMode {
    StepUp,
    StepDown,
}

/// Outcome of running a multiple-testing procedure.
///
/// `r == 0` is reported with `threshold == 0.0`; downstream error-rate
/// accounting treats the empty rejection set as 0/0 = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionResult {
    r: usize,
    threshold: f64,
    rejected: Vec<usize>,
    mode: TestMode,
}

impl RejectionResult {
    /// Number of rejections R.
    pub fn r(&self) -> usize {
        self.r
    }

    /// The critical value at rank R (0.0 when nothing is rejected).
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Original indices of rejected hypotheses, ascending.
    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    pub fn mode(&self) -> TestMode {
        self.mode
    }

    pub fn is_rejected(&self, index: usize) -> bool {
        self.rejected.binary_search(&index).is_ok()
    }
}

fn check_lengths(p: &PValueSet, schedule: &CriticalSchedule) -> Result<()> {
    if p.m() != schedule.m() {
        return Err(Error::LengthMismatch {
            schedule: schedule.m(),
            data: p.m(),
        });
    }
    Ok(())
}

fn collect_smallest(p: &PValueSet, r: usize) -> Vec<usize> {
    let mut rejected: Vec<usize> = (1..=r).map(|rank| p.kth_index(rank)).collect();
    rejected.sort_unstable();
    rejected
}

/// Step-up test: R is the largest rank whose order statistic sits below its
/// critical value; every p-value `<=` the rank-R critical value is rejected.
/// Comparisons are exact `<=` on f64, so a p-value equal to a critical value
/// counts as a crossing.
pub fn step_up(p: &PValueSet, schedule: &CriticalSchedule) -> Result<RejectionResult> {
    check_lengths(p, schedule)?;
    let values = schedule.values();
    let mut r = 0;
    for rank in (1..=p.m()).rev() {
        if p.kth_smallest(rank) <= values[rank - 1] {
            r = rank;
            break;
        }
    }
    let threshold = if r == 0 { 0.0 } else { values[r - 1] };
    Ok(RejectionResult {
        r,
        threshold,
        rejected: collect_smallest(p, r),
        mode: TestMode::StepUp,
    })
}

/// Step-down test: R is the longest prefix of order statistics that all sit
/// below their critical values; the R smallest p-values are rejected (ties
/// resolved by the stable order-statistic ranking).
pub fn step_down(p: &PValueSet, schedule: &CriticalSchedule) -> Result<RejectionResult> {
    check_lengths(p, schedule)?;
    let values = schedule.values();
    let mut r = 0;
    for rank in 1..=p.m() {
        if p.kth_smallest(rank) <= values[rank - 1] {
            r = rank;
        } else {
            break;
        }
    }
    let threshold = if r == 0 { 0.0 } else { values[r - 1] };
    Ok(RejectionResult {
        r,
        threshold,
        rejected: collect_smallest(p, r),
        mode: TestMode::StepDown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(values: &[f64]) -> CriticalSchedule {
        CriticalSchedule::from_values(
            values.to_vec(),
            crate::schedules::ScheduleMeta::new("test", 0.05),
        )
        .unwrap()
    }

    #[test]
    fn step_up_example() {
        let s = schedule(&[0.0125, 0.025, 0.0375, 0.05]);
        let p = PValueSet::new(vec![0.01, 0.02, 0.2, 0.8]).unwrap();
        let res = step_up(&p, &s).unwrap();
        assert_eq!(res.r(), 2);
        assert_eq!(res.rejected(), &[0, 1]);
        assert_eq!(res.threshold(), 0.025);
    }

    #[test]
    fn step_up_no_crossings() {
        let s = schedule(&[0.0125, 0.025, 0.0375, 0.05]);
        let p = PValueSet::new(vec![0.6, 0.7, 0.8, 0.9]).unwrap();
        let res = step_up(&p, &s).unwrap();
        assert_eq!(res.r(), 0);
        assert!(res.rejected().is_empty());
        assert_eq!(res.threshold(), 0.0);
    }

    #[test]
    fn step_up_full_rejection() {
        let s = schedule(&[0.0125, 0.025, 0.0375, 0.05]);
        let p = PValueSet::new(vec![0.0; 4]).unwrap();
        let res = step_up(&p, &s).unwrap();
        assert_eq!(res.r(), 4);
        assert_eq!(res.rejected(), &[0, 1, 2, 3]);
    }

    #[test]
    fn step_down_prefix_break() {
        let s = schedule(&[0.0125, 0.025, 0.0375, 0.05]);
        let p = PValueSet::new(vec![0.01, 0.03, 0.2, 0.8]).unwrap();
        // p_{2:4} = 0.03 > 0.025 breaks the prefix
        let res = step_down(&p, &s).unwrap();
        assert_eq!(res.r(), 1);
        assert_eq!(res.rejected(), &[0]);
    }

    #[test]
    fn step_down_agrees_with_step_up_here() {
        let s = schedule(&[0.0125, 0.025, 0.0375, 0.05]);
        let p = PValueSet::new(vec![0.01, 0.02, 0.2, 0.8]).unwrap();
        assert_eq!(step_down(&p, &s).unwrap().r(), 2);
        assert_eq!(step_up(&p, &s).unwrap().r(), 2);
    }

    #[test]
    fn step_down_nothing_under_first_value() {
        let s = schedule(&[0.0125, 0.025, 0.0375, 0.05]);
        let p = PValueSet::new(vec![0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_eq!(step_down(&p, &s).unwrap().r(), 0);
    }

    #[test]
    fn boundary_pvalue_is_rejected() {
        let s = schedule(&[0.0125, 0.025, 0.0375, 0.05]);
        let p = PValueSet::new(vec![0.05, 0.6, 0.7, 0.8]).unwrap();
        // p = alpha_{1:4}? no: 0.05 > 0.0125; but p equal to alpha_{4:4}
        // only crosses at rank 4 if it is the 4th order statistic.
        let res = step_up(&p, &s).unwrap();
        assert_eq!(res.r(), 0);
        let p = PValueSet::new(vec![0.0125, 0.6, 0.7, 0.8]).unwrap();
        let res = step_up(&p, &s).unwrap();
        assert_eq!(res.r(), 1);
        assert_eq!(res.rejected(), &[0]);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let s = schedule(&[0.0125, 0.025, 0.0375, 0.05]);
        let p = PValueSet::new(vec![0.1, 0.2]).unwrap();
        assert!(matches!(
            step_up(&p, &s),
            Err(Error::LengthMismatch {
                schedule: 4,
                data: 2
            })
        ));
        assert!(matches!(
            step_down(&p, &s),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn ties_cannot_split_the_threshold() {
        let s = schedule(&[0.0125, 0.025, 0.0375, 0.05]);
        let p = PValueSet::new(vec![0.01, 0.01, 0.9, 0.9]).unwrap();
        let res = step_up(&p, &s).unwrap();
        let below = p.values().iter().filter(|&&v| v <= res.threshold()).count();
        assert_eq!(below, res.r());
        assert_eq!(res.rejected().len(), res.r());
    }
}
