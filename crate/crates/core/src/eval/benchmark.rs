//! Baseline-versus-influence comparison on a chronological split.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, MetricsReport};
use super::split::{chronological_split, SplitSpec};
use crate::cascade::{CascadeEvent, CascadeParams};
use crate::error::{Error, Result};
use crate::inference::{
    content_based_preferences, first_voter_preferences, fit_baseline_logistic, fit_influence, predict_events,
    FitConfig, FitReport, ItemFeatureTable, PrefSource, Prediction,
};
use crate::recommender::{Catalog, DEFAULT_ALPHA};
use crate::scalar::Scalar;

/// Event log plus the catalog its items come from.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub events: Vec<CascadeEvent>,
    pub catalog: Catalog,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub events: usize,
    pub users: usize,
    pub items: usize,
    pub votes: usize,
}

impl CorpusSummary {
    pub fn of(events: &[CascadeEvent]) -> Self {
        let users: BTreeSet<_> = events.iter().flat_map(|e| e.group.iter()).collect();
        let items: BTreeSet<_> = events.iter().map(|e| &e.item_id).collect();
        Self {
            events: events.len(),
            users: users.len(),
            items: items.len(),
            votes: events.iter().map(|e| e.votes.len()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport<T> {
    pub summary: CorpusSummary,
    pub train_events: usize,
    pub test_events: usize,
    pub test_votes: usize,
    pub baseline: MetricsReport<T>,
    pub influence: MetricsReport<T>,
    pub influence_fit: FitReport,
}

fn fmt_opt<T: Scalar>(v: Option<T>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{:.3}", x.to_f64_lossy()))
}

impl<T: Scalar> BenchmarkReport<T> {
    /// Plain-text table: one row per metric, one column per model.
    pub fn to_table(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "corpus: {} events, {} users, {} items, {} votes",
            s.events, s.users, s.items, s.votes
        );
        let _ = writeln!(
            out,
            "split: {} train / {} test events ({} test votes), threshold {}",
            self.train_events,
            self.test_events,
            self.test_votes,
            self.baseline.threshold.to_f64_lossy()
        );
        let _ = writeln!(out, "{:<22}{:>10}{:>18}", "", "baseline", "influence model");
        let rows = [
            ("true positive rate", self.baseline.tpr, self.influence.tpr),
            ("false positive rate", self.baseline.fpr, self.influence.fpr),
            ("accuracy", Some(self.baseline.accuracy), Some(self.influence.accuracy)),
            ("AUC", self.baseline.auc, self.influence.auc),
        ];
        for (name, b, i) in rows {
            let _ = writeln!(out, "{name:<22}{:>10}{:>18}", fmt_opt(b), fmt_opt(i));
        }
        out
    }
}

fn pairs<T: Scalar>(predictions: &[Prediction<T>]) -> Vec<(T, bool)> {
    predictions.iter().map(|p| (p.probability, p.label)).collect()
}

/// Fits the independent baseline and the influence model on the training
/// events and scores both on the test events.
pub fn run_benchmark<T: Scalar>(
    corpus: &Corpus,
    config: &FitConfig,
    split: &SplitSpec,
    threshold: T,
) -> Result<BenchmarkReport<T>> {
    let (train, test) = chronological_split(&corpus.events, split)?;
    let test_votes: usize = test.iter().map(|e| e.votes.len()).sum();
    if test.is_empty() || test_votes == 0 {
        return Err(Error::Empty("test split"));
    }
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let features = ItemFeatureTable::<T>::from_catalog(&corpus.catalog);
    let users: BTreeSet<_> = corpus.events.iter().flat_map(|e| e.group.iter()).collect();

    let baseline_params = fit_baseline_logistic(&train, &features, config)?.to_params(users.iter().copied());

    let fixed: Option<CascadeParams<T>> = match config.pref_source {
        PrefSource::FirstVoterLogistic => Some(first_voter_preferences(&train, &features, config)?.params),
        PrefSource::ContentBased => Some(content_based_preferences(&train, &corpus.catalog, T::of(DEFAULT_ALPHA))?),
        PrefSource::FreeVariable => None,
    };
    let (influence_params, influence_fit) = fit_influence(&train, config, fixed.as_ref())?;

    let baseline = classification_metrics(&pairs(&predict_events(&baseline_params, &test)), threshold)?;
    let influence = classification_metrics(&pairs(&predict_events(&influence_params, &test)), threshold)?;
    Ok(BenchmarkReport {
        summary: CorpusSummary::of(&corpus.events),
        train_events: train.len(),
        test_events: test.len(),
        test_votes,
        baseline,
        influence,
        influence_fit,
    })
}
