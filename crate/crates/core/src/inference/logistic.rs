//! Per-user logistic regression over item features.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::FitConfig;
use crate::cascade::{CascadeEvent, CascadeParams, Vote};
use crate::error::{Error, Result};
use crate::ids::{ItemId, UserId};
use crate::recommender::{Catalog, ContentScorer, FeatureEncoder, UserHistory};
use crate::scalar::{logit, sigmoid, softplus, Scalar};

const NEWTON_MAX_ITERS: usize = 100;
const JITTER: f64 = 1e-10;

/// Raw (unstandardized) feature vector of every catalog item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemFeatureTable<T> {
    rows: BTreeMap<ItemId, Vec<T>>,
    dimension: usize,
}

impl<T: Scalar> ItemFeatureTable<T> {
    /// Encodes the catalog without a location reference.
    pub fn from_catalog(catalog: &Catalog) -> Self {
        let encoder = FeatureEncoder::new(catalog, None);
        Self {
            rows: catalog.items().iter().map(|i| (i.item_id.clone(), encoder.encode(i))).collect(),
            dimension: encoder.dimension(),
        }
    }

    pub fn from_rows(rows: BTreeMap<ItemId, Vec<T>>) -> Result<Self> {
        let dimension = rows.values().next().map_or(0, Vec::len);
        if rows.values().any(|r| r.len() != dimension) {
            return Err(Error::InvalidConfig("feature rows differ in length".into()));
        }
        Ok(Self { rows, dimension })
    }

    pub fn get(&self, item: &ItemId) -> Option<&[T]> {
        self.rows.get(item).map(Vec::as_slice)
    }

    pub fn items(&self) -> impl Iterator<Item = &ItemId> {
        self.rows.keys()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Zero-mean, unit-variance transform. Constant columns are centred only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [T]>, dimension: usize) -> Self {
        let rows: Vec<&[T]> = rows.into_iter().collect();
        let n = T::of_usize(rows.len().max(1));
        let mut mean = vec![T::zero(); dimension];
        for r in &rows {
            for (m, &x) in mean.iter_mut().zip(r.iter()) {
                *m += x / n;
            }
        }
        let mut var = vec![T::zero(); dimension];
        for r in &rows {
            for ((v, &m), &x) in var.iter_mut().zip(&mean).zip(r.iter()) {
                *v += (x - m) * (x - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > T::of(1e-24) { v.sqrt() } else { T::one() })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect()
    }
}

/// `P(y = 1 | x) = sigmoid(intercept + w . x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel<T> {
    pub intercept: T,
    pub weights: Vec<T>,
}

impl<T: Scalar> LogisticModel<T> {
    pub fn intercept_only(intercept: T, dimension: usize) -> Self {
        Self { intercept, weights: vec![T::zero(); dimension] }
    }

    pub fn is_intercept_only(&self) -> bool {
        self.weights.iter().all(|w| *w == T::zero())
    }

    pub fn predict(&self, x: &[T]) -> T {
        sigmoid(self.linear(x))
    }

    fn linear(&self, x: &[T]) -> T {
        self.intercept + self.weights.iter().zip(x).map(|(&w, &xi)| w * xi).sum::<T>()
    }
}

/// Ridge-penalized logistic regression by damped Newton steps. The
/// intercept is not penalized. Single-class data yields an intercept-only
/// model at the smoothed rate `(k + 1/2) / (n + 1)`.
pub fn fit_logistic<T: Scalar>(rows: &[Vec<T>], labels: &[bool], l2: T, dimension: usize) -> LogisticModel<T> {
    assert_eq!(rows.len(), labels.len());
    let n = rows.len();
    let positives = labels.iter().filter(|&&y| y).count();
    if n == 0 {
        return LogisticModel::intercept_only(T::zero(), dimension);
    }
    if positives == 0 || positives == n {
        let rate = (T::of_usize(positives) + T::half()) / (T::of_usize(n) + T::one());
        return LogisticModel::intercept_only(logit(rate, T::of(1e-12)), dimension);
    }

    let mut model = LogisticModel::intercept_only(logit(T::of_usize(positives) / T::of_usize(n), T::of(1e-12)), dimension);
    let loss = |m: &LogisticModel<T>| -> T {
        let data: T = rows
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                let z = m.linear(x);
                softplus(z) - if y { z } else { T::zero() }
            })
            .sum();
        data + l2 * T::half() * m.weights.iter().map(|&w| w * w).sum::<T>()
    };
    let mut current = loss(&model);
    let dim = dimension + 1;
    for _ in 0..NEWTON_MAX_ITERS {
        // Parameter order: weights..., intercept.
        let mut grad = vec![T::zero(); dim];
        let mut hess = vec![T::zero(); dim * dim];
        for (x, &y) in rows.iter().zip(labels) {
            let p = model.predict(x);
            let r = p - if y { T::one() } else { T::zero() };
            let w = (p * (T::one() - p)).max(T::of(1e-12));
            let xe = |k: usize| if k == dimension { T::one() } else { x[k] };
            for a in 0..dim {
                grad[a] += r * xe(a);
                for b in a..dim {
                    hess[a * dim + b] += w * xe(a) * xe(b);
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                hess[a * dim + b] = hess[b * dim + a];
            }
        }
        for k in 0..dimension {
            grad[k] += l2 * model.weights[k];
            hess[k * dim + k] += l2 + T::of(JITTER);
        }
        let Some(step) = solve_spd(&hess, &grad, dim) else {
            break;
        };
        let mut t = T::one();
        let mut improved = false;
        for _ in 0..40 {
            let trial = LogisticModel {
                weights: model.weights.iter().zip(&step).map(|(&w, &s)| w - t * s).collect(),
                intercept: model.intercept - t * step[dimension],
            };
            let l = loss(&trial);
            if l <= current {
                let gain = current - l;
                model = trial;
                current = l;
                improved = gain > T::of(1e-12) * (T::one() + current.abs());
                break;
            }
            t *= T::half();
        }
        if !improved {
            break;
        }
    }
    model
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major).
fn solve_spd<T: Scalar>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > T::zero()) {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

/// One logistic model per user over standardized item features; votes are
/// treated as independent of the other members.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel<T> {
    pub standardizer: Standardizer<T>,
    pub per_user: BTreeMap<UserId, LogisticModel<T>>,
    features: ItemFeatureTable<T>,
}

impl<T: Scalar> BaselineModel<T> {
    /// Predicted `P(y = 1)`; 0.5 for users without a model.
    pub fn predict(&self, user: &UserId, item: &ItemId) -> T {
        let Some(model) = self.per_user.get(user) else {
            return T::half();
        };
        match self.features.get(item) {
            Some(raw) => model.predict(&self.standardizer.apply(raw)),
            None => sigmoid(model.intercept),
        }
    }

    /// Predictions as cascade parameters without influence, covering
    /// `users` x every item in the feature table.
    pub fn to_params<'a>(&self, users: impl IntoIterator<Item = &'a UserId>) -> CascadeParams<T> {
        let mut params = CascadeParams::new();
        for u in users {
            for i in self.features.items() {
                params
                    .set_preference(u.clone(), i.clone(), self.predict(u, i))
                    .expect("sigmoid output is a probability");
            }
        }
        params
    }
}

fn training_items(events: &[CascadeEvent]) -> BTreeSet<&ItemId> {
    events.iter().map(|e| &e.item_id).collect()
}

fn fit_per_user<T: Scalar>(
    rows: &[(&UserId, &ItemId, Vote)],
    events: &[CascadeEvent],
    features: &ItemFeatureTable<T>,
    config: &FitConfig,
) -> Result<BaselineModel<T>> {
    config.validate()?;
    let items = training_items(events);
    let standardizer = Standardizer::fit(items.iter().filter_map(|i| features.get(i)), features.dimension());
    let mut by_user: BTreeMap<&UserId, (Vec<Vec<T>>, Vec<bool>)> = BTreeMap::new();
    for &(u, i, v) in rows {
        let raw = features
            .get(i)
            .ok_or_else(|| Error::InvalidConfig(format!("item {i} has no features")))?;
        let entry = by_user.entry(u).or_default();
        entry.0.push(standardizer.apply(raw));
        entry.1.push(v.is_positive());
    }
    let l2 = T::of(config.logistic_l2);
    let per_user = by_user
        .into_iter()
        .map(|(u, (x, y))| (u.clone(), fit_logistic(&x, &y, l2, features.dimension())))
        .collect();
    Ok(BaselineModel { standardizer, per_user, features: features.clone() })
}

/// Baseline: per-user logistic regression on all of the user's votes.
pub fn fit_baseline_logistic<T: Scalar>(
    events: &[CascadeEvent],
    features: &ItemFeatureTable<T>,
    config: &FitConfig,
) -> Result<BaselineModel<T>> {
    let rows: Vec<_> = events
        .iter()
        .flat_map(|e| e.votes.iter().map(move |v| (&v.user, &e.item_id, v.value)))
        .collect();
    fit_per_user(&rows, events, features, config)
}

/// The vote that opened each event, i.e. the votes cast with no
/// predecessors.
pub fn first_voter_rows(events: &[CascadeEvent]) -> Vec<(&UserId, &ItemId, Vote)> {
    events
        .iter()
        .filter_map(|e| e.votes.first().map(|v| (&v.user, &e.item_id, v.value)))
        .collect()
}

/// Inherent preferences estimated from first votes only.
#[derive(Debug, Clone)]
pub struct FirstVoterFit<T> {
    pub params: CascadeParams<T>,
    pub model: BaselineModel<T>,
    pub training_rows: usize,
}

/// Fits the baseline model on first votes and evaluates it for every user
/// seen in `events` and every item in `features`. Users who never voted
/// first get 0.5 everywhere.
pub fn first_voter_preferences<T: Scalar>(
    events: &[CascadeEvent],
    features: &ItemFeatureTable<T>,
    config: &FitConfig,
) -> Result<FirstVoterFit<T>> {
    let rows = first_voter_rows(events);
    let model = fit_per_user(&rows, events, features, config)?;
    let users: BTreeSet<&UserId> = events.iter().flat_map(|e| e.group.iter()).collect();
    Ok(FirstVoterFit {
        params: model.to_params(users),
        training_rows: rows.len(),
        model,
    })
}

/// Preferences from content similarity to each user's vote history in
/// `events`.
pub fn content_based_preferences<T: Scalar>(
    events: &[CascadeEvent],
    catalog: &Catalog,
    alpha: T,
) -> Result<CascadeParams<T>> {
    let history = UserHistory::from_votes(
        events
            .iter()
            .flat_map(|e| e.votes.iter().map(move |v| (&v.user, &e.item_id, v.value))),
    );
    let scorer = ContentScorer::new(catalog, None, alpha)?;
    let users: BTreeSet<&UserId> = events.iter().flat_map(|e| e.group.iter()).collect();
    let mut params = CascadeParams::new();
    for u in users {
        for i in catalog.ids() {
            params.set_preference(u.clone(), i.clone(), scorer.individual_preference(u, i, &history))?;
        }
    }
    Ok(params)
}
