//! Threshold metrics and rank-statistic AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{total_cmp, Scalar};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// TPR, FPR, accuracy and AUC of one prediction set. Rates whose
/// denominator is zero are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T> {
    pub tpr: Option<T>,
    pub fpr: Option<T>,
    pub accuracy: T,
    pub auc: Option<T>,
    pub threshold: T,
    pub counts: ConfusionCounts,
}

/// Mann-Whitney statistic in exact integer form: `twice_u / (2 * pairs)` is
/// the AUC, ties contributing one half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AucCounts {
    pub twice_u: u64,
    pub pairs: u64,
}

impl AucCounts {
    pub fn value<T: Scalar>(&self) -> Option<T> {
        (self.pairs > 0).then(|| {
            T::of(self.twice_u as f64) / T::of(2.0 * self.pairs as f64)
        })
    }
}

/// Rank-sum computation of the AUC using doubled mid-ranks so every
/// quantity stays an integer.
pub fn auc_counts<T: Scalar>(predictions: &[(T, bool)]) -> AucCounts {
    let mut sorted: Vec<&(T, bool)> = predictions.iter().collect();
    sorted.sort_by(|a, b| total_cmp(&a.0, &b.0));
    let positives = predictions.iter().filter(|p| p.1).count() as u64;
    let negatives = predictions.len() as u64 - positives;
    let mut twice_rank_sum: u64 = 0;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start;
        while end < sorted.len() && sorted[end].0 == sorted[start].0 {
            end += 1;
        }
        // 1-based positions start+1 ..= end share the mid-rank (start+1+end)/2.
        let twice_mid_rank = (start + 1 + end) as u64;
        let group_positives = sorted[start..end].iter().filter(|p| p.1).count() as u64;
        twice_rank_sum += twice_mid_rank * group_positives;
        start = end;
    }
    AucCounts {
        twice_u: twice_rank_sum - positives * (positives + 1),
        pairs: positives * negatives,
    }
}

pub fn auc<T: Scalar>(predictions: &[(T, bool)]) -> Option<T> {
    auc_counts(predictions).value()
}

/// Confusion counts at `threshold` (predict positive when `p >= threshold`)
/// plus AUC.
pub fn classification_metrics<T: Scalar>(predictions: &[(T, bool)], threshold: T) -> Result<MetricsReport<T>> {
    if predictions.is_empty() {
        return Err(Error::Empty("prediction set"));
    }
    let mut counts = ConfusionCounts::default();
    for &(p, label) in predictions {
        match (p >= threshold, label) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, false) => counts.tn += 1,
            (false, true) => counts.fn_ += 1,
        }
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| T::of(num as f64) / T::of(den as f64));
    Ok(MetricsReport {
        tpr: ratio(counts.tp, counts.tp + counts.fn_),
        fpr: ratio(counts.fp, counts.fp + counts.tn),
        accuracy: T::of((counts.tp + counts.tn) as f64) / T::of(counts.total() as f64),
        auc: auc(predictions),
        threshold,
        counts,
    })
}
