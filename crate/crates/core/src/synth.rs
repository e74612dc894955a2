//! Synthetic corpora with known ground-truth parameters.
//!
//! Items get random categories, price, rating, rater count and location.
//! Preferences come from one of two models (see [`PrefModel`]); influence
//! weights are drawn uniformly for a random subset of ordered user pairs.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cascade::{simulate_dataset, CascadeEvent, CascadeParams};
use crate::error::{Error, Result};
use crate::ids::{ItemId, UserId};
use crate::recommender::{Catalog, FeatureEncoder, GeoPoint, ItemFeatures};
use crate::scalar::total_cmp;

const CATEGORIES: [&str; 8] = ["thai", "pizza", "sushi", "mexican", "italian", "indian", "burgers", "cafe"];
const CENTER: GeoPoint = GeoPoint { lat: 40.7128, lon: -74.0060 };

/// How ground-truth preferences are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrefModel {
    /// Every (user, item) preference drawn independently and uniformly
    /// from the preference range.
    Independent,
    /// Each user scores items with a random linear function of the item
    /// features; the score ranks are mapped evenly onto the preference
    /// range, so preferences are learnable from item features.
    FeatureRank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub users: usize,
    pub items: usize,
    pub events: usize,
    pub group_sizes: Vec<usize>,
    pub pref_range: (f64, f64),
    pub pref_model: PrefModel,
    pub influence_range: (f64, f64),
    /// Fraction of ordered user pairs with nonzero influence.
    pub influence_density: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            users: 19,
            items: 79,
            events: 277,
            group_sizes: vec![2, 4, 8],
            pref_range: (0.2, 0.8),
            pref_model: PrefModel::Independent,
            influence_range: (0.3, 0.7),
            influence_density: 0.3,
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi;
        if self.users == 0 || self.items == 0 {
            return Err(Error::InvalidConfig("need at least one user and one item".into()));
        }
        if !range_ok(self.pref_range) || !range_ok(self.influence_range) {
            return Err(Error::InvalidConfig("probability ranges must lie in [0, 1] with lo <= hi".into()));
        }
        if !(0.0..=1.0).contains(&self.influence_density) {
            return Err(Error::InvalidConfig("influence density must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn user_ids(&self) -> Vec<UserId> {
        let width = (self.users - 1).max(1).to_string().len().max(2);
        (0..self.users).map(|k| UserId::new(format!("u{k:0width$}"))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub catalog: Catalog,
    pub truth: CascadeParams<f64>,
    pub users: Vec<UserId>,
    pub events: Vec<CascadeEvent>,
}

pub fn random_catalog<R: Rng>(n: usize, rng: &mut R) -> Catalog {
    let width = (n.max(2) - 1).to_string().len().max(3);
    let items = (0..n)
        .map(|k| {
            let mut categories = BTreeSet::new();
            categories.insert(CATEGORIES.choose(rng).unwrap().to_string());
            if rng.gen_bool(0.3) {
                categories.insert(CATEGORIES.choose(rng).unwrap().to_string());
            }
            let id = format!("r{k:0width$}");
            ItemFeatures {
                item_id: ItemId::new(id.clone()),
                title: format!("Restaurant {k}"),
                categories,
                price_level: rng.gen_range(1..=4),
                rating: f64::from(rng.gen_range(2u8..=10)) / 2.0,
                rating_count: rng.gen_range(0.0f64..2000f64.ln()).exp() as u64,
                location: GeoPoint::new(
                    CENTER.lat + rng.gen_range(-0.2..0.2),
                    CENTER.lon + rng.gen_range(-0.2..0.2),
                ),
                link: format!("https://example.org/biz/{id}"),
                available: true,
            }
        })
        .collect();
    Catalog::new(items).expect("generated items are valid")
}

/// Builds catalog, ground truth and events from `config`.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let catalog = random_catalog(config.items, &mut rng);
    let users = config.user_ids();
    let encoder = FeatureEncoder::new(&catalog, None);
    let vectors: Vec<Vec<f64>> = catalog.items().iter().map(|i| encoder.encode(i)).collect();

    let mut truth = CascadeParams::new();
    let (lo, hi) = config.pref_range;
    for u in &users {
        if config.pref_model == PrefModel::Independent {
            for item in catalog.items() {
                truth.set_preference(u.clone(), item.item_id.clone(), rng.gen_range(lo..=hi))?;
            }
            continue;
        }
        let weights: Vec<f64> = (0..encoder.dimension()).map(|_| rng.sample(StandardNormal)).collect();
        let scores: Vec<f64> = vectors
            .iter()
            .map(|x| x.iter().zip(&weights).map(|(a, b)| a * b).sum())
            .collect();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| total_cmp(&scores[a], &scores[b]).then(a.cmp(&b)));
        for (rank, &pos) in order.iter().enumerate() {
            let p = lo + (hi - lo) * (rank as f64 + 0.5) / scores.len() as f64;
            truth.set_preference(u.clone(), catalog.items()[pos].item_id.clone(), p)?;
        }
    }
    let (ilo, ihi) = config.influence_range;
    for u in &users {
        for v in &users {
            if u != v && rng.gen_bool(config.influence_density) {
                truth.set_influence(v.clone(), u.clone(), rng.gen_range(ilo..=ihi))?;
            }
        }
    }

    let item_ids: Vec<ItemId> = catalog.ids().cloned().collect();
    let events = simulate_dataset(&truth, &users, &item_ids, config.events, &config.group_sizes, rng.gen())?;
    Ok(SyntheticCorpus { catalog, truth, users, events })
}
