//! p-value sets with precomputed order statistics, plus the simulation
//! ground truth describing which hypotheses are genuinely null.

use crate::error::{Error, Result};

/// A vector of p-values together with its order statistics.
///
/// Order statistics are computed once at construction; ties are broken by
/// ascending original index (stable sort), so repeated values keep their
/// input order.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueSet {
    values: Vec<f64>,
    /// Original indices sorted so that `values[order[0]] <= values[order[1]] <= ...`.
    order: Vec<usize>,
}

impl PValueSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidPValue { index, value });
            }
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        Ok(Self { values, order })
    }

    /// Number of hypotheses `m`.
    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// p-values in original input order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Order statistics as `(value, original_index)` pairs, ascending.
    pub fn order_statistics(&self) -> Vec<(f64, usize)> {
        self.order.iter().map(|&i| (self.values[i], i)).collect()
    }

    /// The `rank`-th smallest p-value (1-based), i.e. `p_{rank:m}`.
    pub fn kth_smallest(&self, rank: usize) -> f64 {
        assert!(rank >= 1 && rank <= self.m(), "rank out of range");
        self.values[self.order[rank - 1]]
    }

    /// Original index carried by the `rank`-th order statistic (1-based rank).
    pub(crate) fn kth_index(&self, rank: usize) -> usize {
        self.order[rank - 1]
    }
}

/// Which hypotheses are true nulls; only the simulation layer knows this.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    null_mask: Vec<bool>,
    m0: usize,
}

impl GroundTruth {
    pub fn new(null_mask: Vec<bool>) -> Result<Self> {
        if null_mask.is_empty() {
            return Err(Error::EmptyInput);
        }
        let m0 = null_mask.iter().filter(|&&b| b).count();
        Ok(Self { null_mask, m0 })
    }

    /// Layout used by the samplers: indices `0..m0` null, the rest false.
    pub fn nulls_first(m: usize, m0: usize) -> Result<Self> {
        if m0 > m {
            return Err(Error::Config(format!("m0 = {m0} exceeds m = {m}")));
        }
        Self::new((0..m).map(|i| i < m0).collect())
    }

    pub fn m(&self) -> usize {
        self.null_mask.len()
    }

    pub fn m0(&self) -> usize {
        self.m0
    }

    pub fn m1(&self) -> usize {
        self.m() - self.m0
    }

    pub fn is_null(&self, index: usize) -> bool {
        self.null_mask[index]
    }

    /// Count of false rejections among `rejected` (V).
    pub fn false_rejections(&self, rejected: &[usize]) -> usize {
        rejected.iter().filter(|&&i| self.null_mask[i]).count()
    }
}
