use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{ItemId, UserId};
use crate::scalar::Scalar;

/// Inherent preferences `p(u|i)` and pairwise influences `p(v|u)`.
///
/// Unknown preferences fall back to [`CascadeParams::default_preference`]
/// (0.5 unless changed); unknown influences are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    into = "ParamsRepr<T>",
    try_from = "ParamsRepr<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct CascadeParams<T> {
    default_pref: T,
    pref: BTreeMap<UserId, BTreeMap<ItemId, T>>,
    // influencee -> influencer -> p(v|u)
    infl: BTreeMap<UserId, BTreeMap<UserId, T>>,
}

impl<T: Scalar> Default for CascadeParams<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn check_probability<T: Scalar>(what: impl FnOnce() -> String, value: T) -> Result<()> {
    if value >= T::zero() && value <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            what: what(),
            value: value.to_f64_lossy(),
        })
    }
}

impl<T: Scalar> CascadeParams<T> {
    pub fn new() -> Self {
        Self {
            default_pref: T::half(),
            pref: BTreeMap::new(),
            infl: BTreeMap::new(),
        }
    }

    pub fn with_default_preference(mut self, p: T) -> Result<Self> {
        check_probability(|| "default preference".into(), p)?;
        self.default_pref = p;
        Ok(self)
    }

    pub fn default_preference(&self) -> T {
        self.default_pref
    }

    /// `p(u|i)`, or the default for unseen pairs.
    pub fn preference(&self, user: &UserId, item: &ItemId) -> T {
        self.pref
            .get(user)
            .and_then(|m| m.get(item))
            .copied()
            .unwrap_or(self.default_pref)
    }

    pub fn known_preference(&self, user: &UserId, item: &ItemId) -> Option<T> {
        self.pref.get(user).and_then(|m| m.get(item)).copied()
    }

    /// `p(v|u)`: probability that `influencer`'s earlier positive vote alone
    /// turns `influencee` positive.
    pub fn influence(&self, influencer: &UserId, influencee: &UserId) -> T {
        self.infl
            .get(influencee)
            .and_then(|m| m.get(influencer))
            .copied()
            .unwrap_or_else(T::zero)
    }

    pub fn set_preference(&mut self, user: UserId, item: ItemId, p: T) -> Result<()> {
        check_probability(|| format!("p({user}|{item})"), p)?;
        self.pref.entry(user).or_default().insert(item, p);
        Ok(())
    }

    pub fn set_influence(&mut self, influencer: UserId, influencee: UserId, p: T) -> Result<()> {
        check_probability(|| format!("p({influencer}|{influencee})"), p)?;
        if influencer == influencee {
            if p == T::zero() {
                return Ok(());
            }
            return Err(Error::InvalidConfig(format!(
                "self-influence of {influencer} must be zero"
            )));
        }
        self.infl
            .entry(influencee)
            .or_default()
            .insert(influencer, p);
        Ok(())
    }

    /// Preferences as `(user, item, p)` in key order.
    pub fn preferences(&self) -> impl Iterator<Item = (&UserId, &ItemId, T)> + '_ {
        self.pref
            .iter()
            .flat_map(|(u, m)| m.iter().map(move |(i, p)| (u, i, *p)))
    }

    /// Influences as `(influencer, influencee, p)`, ordered by influencer.
    pub fn influences(&self) -> impl Iterator<Item = (&UserId, &UserId, T)> + '_ {
        let mut out: Vec<_> = self
            .infl
            .iter()
            .flat_map(|(u, m)| m.iter().map(move |(v, p)| (v, u, *p)))
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out.into_iter()
    }

    pub fn preference_count(&self) -> usize {
        self.pref.values().map(BTreeMap::len).sum()
    }

    pub fn influence_count(&self) -> usize {
        self.infl.values().map(BTreeMap::len).sum()
    }

    /// Copy of these parameters with every influence removed.
    pub fn without_influence(&self) -> Self {
        Self {
            default_pref: self.default_pref,
            pref: self.pref.clone(),
            infl: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct PrefEntry<T> {
    pub user: UserId,
    pub item: ItemId,
    pub p: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct InflEntry<T> {
    pub v: UserId,
    pub u: UserId,
    pub p: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ParamsRepr<T> {
    default_pref: T,
    pref: Vec<PrefEntry<T>>,
    infl: Vec<InflEntry<T>>,
}

impl<T: Scalar> From<CascadeParams<T>> for ParamsRepr<T> {
    fn from(params: CascadeParams<T>) -> Self {
        ParamsRepr {
            default_pref: params.default_pref,
            pref: params
                .preferences()
                .map(|(u, i, p)| PrefEntry { user: u.clone(), item: i.clone(), p })
                .collect(),
            infl: params
                .influences()
                .map(|(v, u, p)| InflEntry { v: v.clone(), u: u.clone(), p })
                .collect(),
        }
    }
}

impl<T: Scalar> TryFrom<ParamsRepr<T>> for CascadeParams<T> {
    type Error = Error;

    fn try_from(repr: ParamsRepr<T>) -> Result<Self> {
        let mut params = CascadeParams::new().with_default_preference(repr.default_pref)?;
        for e in repr.pref {
            params.set_preference(e.user, e.item, e.p)?;
        }
        for e in repr.infl {
            params.set_influence(e.v, e.u, e.p)?;
        }
        Ok(params)
    }
}
