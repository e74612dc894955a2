//! Content-based individual scores and their group aggregate.

use serde::{Deserialize, Serialize};

use super::features::{Catalog, FeatureEncoder, GeoPoint, ItemFeatures};
use super::history::UserHistory;
use crate::error::{Error, Result};
use crate::ids::{ItemId, UserId};
use crate::scalar::{total_cmp, Scalar};

/// Default smoothing toward the cold-start prior.
pub const DEFAULT_ALPHA: f64 = 1.0;
/// Default variance weight `w2`.
pub const DEFAULT_VARIANCE_WEIGHT: f64 = 0.25;
/// Default length of a recommendation list.
pub const DEFAULT_LIST_LENGTH: usize = 10;

/// Weights of the group score `w1 * sum(r) + w2 * (1 - var(r))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupScoreWeights<T> {
    pub w1: T,
    pub w2: T,
}

impl<T: Scalar> GroupScoreWeights<T> {
    pub fn new(w1: T, w2: T) -> Result<Self> {
        if !(w1 >= T::zero() && w2 >= T::zero()) || (w1 == T::zero() && w2 == T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "group score weights must be nonnegative and not both zero (w1={w1}, w2={w2})"
            )));
        }
        Ok(Self { w1, w2 })
    }

    /// `w1 = 1/|G|` with the given variance weight.
    pub fn for_group(group_size: usize, w2: T) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::Empty("group"));
        }
        Self::new(T::one() / T::of_usize(group_size), w2)
    }
}

/// Group score of one item from the members' predicted preferences.
/// Uses the population variance.
pub fn group_score<T: Scalar>(predictions: &[T], weights: GroupScoreWeights<T>) -> Result<T> {
    if predictions.is_empty() {
        return Err(Error::Empty("member predictions"));
    }
    let n = T::of_usize(predictions.len());
    let sum: T = predictions.iter().copied().sum();
    let mean = sum / n;
    let var = predictions.iter().map(|&r| (r - mean) * (r - mean)).sum::<T>() / n;
    Ok(weights.w1 * sum + weights.w2 * (T::one() - var))
}

/// Scores items for a user by similarity-weighted history averages,
/// shrunk toward 0.5 with strength `alpha`.
pub struct ContentScorer<'a, T> {
    catalog: &'a Catalog,
    /// Feature vectors scaled to unit length (zero vectors stay zero), so
    /// cosine similarity is a dot product.
    units: Vec<Vec<T>>,
    alpha: T,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

impl<'a, T: Scalar> ContentScorer<'a, T> {
    pub fn new(catalog: &'a Catalog, reference: Option<GeoPoint>, alpha: T) -> Result<Self> {
        if !(alpha >= T::zero()) {
            return Err(Error::InvalidConfig(format!("smoothing must be >= 0, got {alpha}")));
        }
        let encoder = FeatureEncoder::new(catalog, reference);
        let units = catalog
            .items()
            .iter()
            .map(|i| {
                let v: Vec<T> = encoder.encode(i);
                let norm = dot(&v, &v).sqrt();
                if norm == T::zero() {
                    v
                } else {
                    v.into_iter().map(|x| x / norm).collect()
                }
            })
            .collect();
        Ok(Self { catalog, units, alpha })
    }

    pub fn similarity(&self, a: &ItemId, b: &ItemId) -> Option<T> {
        let (pa, pb) = (self.catalog.position(a)?, self.catalog.position(b)?);
        Some(dot(&self.units[pa], &self.units[pb]))
    }

    /// The user's history as (catalog position, running average) pairs.
    fn profile(&self, user: &UserId, history: &UserHistory) -> Vec<(usize, T)> {
        history
            .items_of(user)
            .filter_map(|(item, entry)| Some((self.catalog.position(item)?, T::of(entry.s))))
            .collect()
    }

    fn score(&self, pos: usize, profile: &[(usize, T)]) -> T {
        let target = &self.units[pos];
        let mut num = self.alpha * T::half();
        let mut den = self.alpha;
        for &(pj, s) in profile {
            let sim = dot(target, &self.units[pj]);
            num += sim * s;
            den += sim;
        }
        if den > T::zero() {
            (num / den).max(T::zero()).min(T::one())
        } else {
            T::half()
        }
    }

    /// `(sum_j sim(i,j) s_j + alpha/2) / (sum_j sim(i,j) + alpha)`; 0.5 for
    /// an empty history or zero total weight.
    pub fn individual_preference(&self, user: &UserId, item: &ItemId, history: &UserHistory) -> T {
        match self.catalog.position(item) {
            Some(pos) => self.score(pos, &self.profile(user, history)),
            None => T::half(),
        }
    }
}

/// One-shot form of [`ContentScorer::individual_preference`].
pub fn individual_preference<T: Scalar>(
    user: &UserId,
    item: &ItemFeatures,
    history: &UserHistory,
    catalog: &Catalog,
    alpha: T,
) -> Result<T> {
    if !catalog.contains(&item.item_id) {
        return Err(Error::InvalidConfig(format!("item {} is not in the catalog", item.item_id)));
    }
    Ok(ContentScorer::new(catalog, None, alpha)?.individual_preference(user, &item.item_id, history))
}

/// Candidate filters taken from the event details.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankFilters {
    #[serde(default)]
    pub category: Option<String>,
    /// Event date/time. When present, items flagged unavailable are dropped.
    #[serde(default)]
    pub datetime: Option<String>,
    /// Event location; also the reference point of the distance features.
    #[serde(default)]
    pub location: Option<GeoPoint>,
    /// Keep only items within this distance of `location`.
    #[serde(default)]
    pub radius_km: Option<f64>,
}

impl RankFilters {
    pub fn admits(&self, item: &ItemFeatures) -> bool {
        if let Some(cat) = &self.category {
            if !item.categories.contains(cat) {
                return false;
            }
        }
        if self.datetime.is_some() && !item.available {
            return false;
        }
        if let (Some(center), Some(radius)) = (&self.location, self.radius_km) {
            if center.distance_km(&item.location) > radius {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem<T> {
    pub item_id: ItemId,
    pub score: T,
    pub member_predictions: Vec<T>,
}

/// Top-`k` items for the group by group score over content predictions.
/// Ties go to the item with more raters, then the smaller id.
pub fn rank_for_group<T: Scalar>(
    group: &[UserId],
    catalog: &Catalog,
    history: &UserHistory,
    weights: GroupScoreWeights<T>,
    filters: &RankFilters,
    alpha: T,
    k: usize,
) -> Result<Vec<ScoredItem<T>>> {
    if catalog.is_empty() {
        return Err(Error::Empty("catalog"));
    }
    if group.is_empty() {
        return Err(Error::Empty("group"));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let scorer = ContentScorer::new(catalog, filters.location, alpha)?;
    let profiles: Vec<Vec<(usize, T)>> = group.iter().map(|u| scorer.profile(u, history)).collect();
    let mut scored = Vec::new();
    for (pos, item) in catalog.items().iter().enumerate().filter(|(_, i)| filters.admits(i)) {
        let preds: Vec<T> = profiles.iter().map(|p| scorer.score(pos, p)).collect();
        let score = group_score(&preds, weights)?;
        scored.push((item, ScoredItem { item_id: item.item_id.clone(), score, member_predictions: preds }));
    }
    scored.sort_by(|(ia, a), (ib, b)| {
        total_cmp(&b.score, &a.score)
            .then_with(|| ib.rating_count.cmp(&ia.rating_count))
            .then_with(|| ia.item_id.cmp(&ib.item_id))
    });
    Ok(scored.into_iter().take(k).map(|(_, s)| s).collect())
}
