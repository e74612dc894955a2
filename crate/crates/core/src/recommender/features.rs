//! Catalog entries and their content feature vectors.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::ItemId;
use crate::scalar::Scalar;

const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Distance bucket edges in kilometres: <1, <5, <20, >=20.
pub const DISTANCE_BUCKETS_KM: [f64; 3] = [1.0, 5.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    /// Great-circle distance (haversine).
    pub fn distance_km(&self, other: &GeoPoint) -> f64 {
        let (p1, p2) = (self.lat.to_radians(), other.lat.to_radians());
        let dp = p2 - p1;
        let dl = (other.lon - self.lon).to_radians();
        let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
    }
}

fn yes() -> bool {
    true
}

/// A catalog entry with the signals shown on the voting page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemFeatures {
    pub item_id: ItemId,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub categories: BTreeSet<String>,
    pub price_level: u8,
    pub rating: f64,
    pub rating_count: u64,
    pub location: GeoPoint,
    /// Stored verbatim, never dereferenced.
    #[serde(default)]
    pub link: String,
    /// Items flagged unavailable are dropped by the date/time filter.
    #[serde(default = "yes")]
    pub available: bool,
}

impl ItemFeatures {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("item {}: {msg}", self.item_id)));
        if !(1..=4).contains(&self.price_level) {
            return bad(format!("price_level {} outside 1..=4", self.price_level));
        }
        if !(0.0..=5.0).contains(&self.rating) {
            return bad(format!("rating {} outside [0, 5]", self.rating));
        }
        if !(-90.0..=90.0).contains(&self.location.lat) || !(-180.0..=180.0).contains(&self.location.lon) {
            return bad("location out of range".into());
        }
        Ok(())
    }
}

/// Validated, id-indexed list of items. Serialized as a JSON array.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ItemFeatures>", into = "Vec<ItemFeatures>")]
pub struct Catalog {
    items: Vec<ItemFeatures>,
    index: BTreeMap<ItemId, usize>,
}

impl TryFrom<Vec<ItemFeatures>> for Catalog {
    type Error = Error;

    fn try_from(items: Vec<ItemFeatures>) -> Result<Self> {
        Catalog::new(items)
    }
}

impl From<Catalog> for Vec<ItemFeatures> {
    fn from(c: Catalog) -> Self {
        c.items
    }
}

impl Catalog {
    pub fn new(items: Vec<ItemFeatures>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (pos, item) in items.iter().enumerate() {
            item.validate()?;
            if index.insert(item.item_id.clone(), pos).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate item {}", item.item_id)));
            }
        }
        Ok(Self { items, index })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn get(&self, id: &ItemId) -> Option<&ItemFeatures> {
        self.index.get(id).map(|&pos| &self.items[pos])
    }

    pub fn position(&self, id: &ItemId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &ItemId) -> bool {
        self.index.contains_key(id)
    }

    pub fn items(&self) -> &[ItemFeatures] {
        &self.items
    }

    pub fn ids(&self) -> impl Iterator<Item = &ItemId> {
        self.items.iter().map(|i| &i.item_id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Maps items to fixed-length vectors:
/// one-hot categories, price/4, rating/5, log(1+count) over the catalog
/// maximum, and a one-hot distance bucket relative to a reference point.
#[derive(Debug, Clone)]
pub struct FeatureEncoder {
    categories: Vec<String>,
    max_log_count: f64,
    reference: Option<GeoPoint>,
}

impl FeatureEncoder {
    pub fn new(catalog: &Catalog, reference: Option<GeoPoint>) -> Self {
        let categories: BTreeSet<&String> =
            catalog.items().iter().flat_map(|i| i.categories.iter()).collect();
        let max_log_count = catalog
            .items()
            .iter()
            .map(|i| (i.rating_count as f64).ln_1p())
            .fold(0.0, f64::max);
        Self {
            categories: categories.into_iter().cloned().collect(),
            max_log_count,
            reference,
        }
    }

    pub fn dimension(&self) -> usize {
        self.categories.len() + 3 + DISTANCE_BUCKETS_KM.len() + 1
    }

    pub fn encode<T: Scalar>(&self, item: &ItemFeatures) -> Vec<T> {
        let mut v = Vec::with_capacity(self.dimension());
        v.extend(self.categories.iter().map(|c| {
            if item.categories.contains(c) {
                T::one()
            } else {
                T::zero()
            }
        }));
        v.push(T::of(f64::from(item.price_level) / 4.0));
        v.push(T::of(item.rating / 5.0));
        let count = if self.max_log_count > 0.0 {
            (item.rating_count as f64).ln_1p() / self.max_log_count
        } else {
            0.0
        };
        v.push(T::of(count));
        let mut buckets = [T::zero(); DISTANCE_BUCKETS_KM.len() + 1];
        if let Some(reference) = &self.reference {
            let d = reference.distance_km(&item.location);
            let slot = DISTANCE_BUCKETS_KM
                .iter()
                .position(|&edge| d < edge)
                .unwrap_or(DISTANCE_BUCKETS_KM.len());
            buckets[slot] = T::one();
        }
        v.extend(buckets);
        v
    }
}

/// Cosine of the angle between two vectors; zero if either is all zeros.
pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    dot / (na.sqrt() * nb.sqrt())
}
