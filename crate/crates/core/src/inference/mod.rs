//! Maximum-likelihood estimation of social influence and inherent
//! preferences from recorded vote sequences, plus the independent
//! logistic-regression baseline.

mod logistic;
mod model_file;
mod objective;
mod optimize;
mod predict;

use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeEvent, CascadeParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use logistic::{
    content_based_preferences, first_voter_preferences, first_voter_rows, fit_baseline_logistic, fit_logistic,
    BaselineModel, FirstVoterFit, ItemFeatureTable, LogisticModel, Standardizer,
};
pub use model_file::{FittedModel, MODEL_FORMAT_VERSION};
pub use objective::{
    log_likelihood_and_gradient, LikelihoodProblem, ParamKey, INITIAL_INFLUENCE_LOGIT, INITIAL_PREF_LOGIT,
    LOGIT_BOUND, MIN_COOCCURRENCE,
};
pub use predict::{predict_events, Prediction};

/// Where `p(u|i)` comes from when fitting influence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrefSource {
    /// Logistic regression on the votes a user cast first; held fixed.
    FirstVoterLogistic,
    /// Content-based scores from vote histories; held fixed.
    ContentBased,
    /// Estimated jointly with the influences.
    FreeVariable,
}

/// Solver controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Weight of `(lambda/2) * |theta|^2` on the logits.
    pub l2_penalty: f64,
    /// Relative objective change that counts as converged.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub pref_source: PrefSource,
    /// Ridge weight of the per-user logistic models (intercept unpenalized).
    pub logistic_l2: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            l2_penalty: 1e-3,
            tol: 1e-6,
            max_iters: 5000,
            seed: 0,
            pref_source: PrefSource::FirstVoterLogistic,
            logistic_l2: 1.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_penalty >= 0.0) || !self.l2_penalty.is_finite() {
            return Err(Error::InvalidConfig(format!("l2_penalty must be >= 0, got {}", self.l2_penalty)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.logistic_l2 >= 0.0) {
            return Err(Error::InvalidConfig(format!("logistic_l2 must be >= 0, got {}", self.logistic_l2)));
        }
        Ok(())
    }

    /// Projected-gradient norm below which a fit may report convergence:
    /// `sqrt(tol * n)` for `n` observed votes.
    pub fn gradient_threshold(&self, observations: usize) -> f64 {
        (self.tol * observations.max(1) as f64).sqrt()
    }
}

/// Outcome of [`fit_influence`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Unpenalized log-likelihood at the returned parameters.
    pub final_log_likelihood: f64,
    /// Penalized objective that was maximized.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub gradient_threshold: f64,
    pub free_preferences: usize,
    pub free_influences: usize,
    pub observations: usize,
}

/// Fits influences (and, with [`PrefSource::FreeVariable`], preferences)
/// by maximizing the penalized likelihood of `events`.
pub fn fit_influence<T: Scalar>(
    events: &[CascadeEvent],
    config: &FitConfig,
    fixed_pref: Option<&CascadeParams<T>>,
) -> Result<(CascadeParams<T>, FitReport)> {
    fit_influence_observed(events, config, fixed_pref, |_, _| {})
}

/// [`fit_influence`] reporting the objective after every accepted step.
pub fn fit_influence_observed<T: Scalar>(
    events: &[CascadeEvent],
    config: &FitConfig,
    fixed_pref: Option<&CascadeParams<T>>,
    observe: impl FnMut(usize, T),
) -> Result<(CascadeParams<T>, FitReport)> {
    let problem = LikelihoodProblem::new(events, config, fixed_pref)?;
    let start = problem.initial_logits();
    if !problem.objective(&start).is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    let threshold = config.gradient_threshold(problem.observation_count());
    let settings = optimize::AscentSettings {
        bound: T::of(LOGIT_BOUND),
        tol: T::of(config.tol),
        gradient_threshold: T::of(threshold),
        max_iters: config.max_iters,
    };
    let outcome = optimize::maximize(|x| problem.value_and_gradient(x), start, &settings, observe);
    let (free_preferences, free_influences) = problem.keys().iter().fold((0, 0), |(p, i), k| match k {
        ParamKey::Preference { .. } => (p + 1, i),
        ParamKey::Influence { .. } => (p, i + 1),
    });
    let report = FitReport {
        final_log_likelihood: problem.log_likelihood(&outcome.x).to_f64_lossy(),
        objective: outcome.value.to_f64_lossy(),
        iterations: outcome.iterations,
        converged: outcome.converged,
        gradient_norm: outcome.gradient_norm.to_f64_lossy(),
        gradient_threshold: threshold,
        free_preferences,
        free_influences,
        observations: problem.observation_count(),
    };
    Ok((problem.to_params(&outcome.x), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{CastVote, Vote};
    use crate::ids::{EventId, ItemId, UserId};

    fn ev(id: usize, item: &str, votes: &[(&str, bool)]) -> CascadeEvent {
        CascadeEvent {
            event_id: EventId::new(format!("e{id}")),
            item_id: ItemId::new(item),
            group: votes.iter().map(|(u, _)| UserId::new(*u)).collect(),
            votes: votes
                .iter()
                .enumerate()
                .map(|(k, (u, v))| CastVote { user: UserId::new(*u), value: Vote::from_bool(*v), ts: k as i64 })
                .collect(),
            created_ts: None,
        }
    }

    #[test]
    fn single_pair_matches_closed_form() {
        // v always positive first; u positive in 60 of 100 events with
        // known p(u|i) = 0.2, so p(v|u) = 1 - 0.4/0.8 = 0.5.
        let events: Vec<_> = (0..100).map(|k| ev(k, "i", &[("v", true), ("u", k < 60)])).collect();
        let mut fixed = CascadeParams::new();
        fixed.set_preference("u".into(), "i".into(), 0.2).unwrap();
        fixed.set_preference("v".into(), "i".into(), 0.9).unwrap();
        let config = FitConfig { l2_penalty: 1e-9, tol: 1e-12, ..FitConfig::default() };
        let (params, report) = fit_influence::<f64>(&events, &config, Some(&fixed)).unwrap();
        assert!(report.converged, "{report:?}");
        assert_eq!(report.free_influences, 1);
        assert!((params.influence(&"v".into(), &"u".into()) - 0.5).abs() < 1e-6);
        assert_eq!(params.preference(&"u".into(), &"i".into()), 0.2);
    }

    #[test]
    fn no_cooccurrence_gives_empirical_rates() {
        let mut events = Vec::new();
        for k in 0..40 {
            events.push(ev(k, "x", &[("a", k % 4 == 0)]));
            events.push(ev(100 + k, "y", &[("a", k % 5 < 3)]));
            events.push(ev(200 + k, "x", &[("b", false), ("a", k % 2 == 0)]));
        }
        let config = FitConfig {
            l2_penalty: 1e-10,
            tol: 1e-12,
            pref_source: PrefSource::FreeVariable,
            ..FitConfig::default()
        };
        let (params, report) = fit_influence::<f64>(&events, &config, None).unwrap();
        assert_eq!(report.free_influences, 0);
        assert_eq!(params.influence_count(), 0);
        // a on x: 10 + 20 positives of 80
        assert!((params.preference(&"a".into(), &"x".into()) - 30.0 / 80.0).abs() < 1e-5);
        assert!((params.preference(&"a".into(), &"y".into()) - 0.6).abs() < 1e-5);
        assert!(params.preference(&"b".into(), &"x".into()) < 1e-4);
        // users without data keep the default
        assert_eq!(params.preference(&"z".into(), &"x".into()), 0.5);
    }

    #[test]
    fn objective_never_decreases() {
        let events: Vec<_> = (0..30)
            .map(|k| ev(k, ["x", "y"][k % 2], &[("a", k % 3 == 0), ("b", k % 4 != 0), ("c", k % 5 == 1)]))
            .collect();
        let config = FitConfig { pref_source: PrefSource::FreeVariable, ..FitConfig::default() };
        let mut trace = Vec::new();
        fit_influence_observed::<f64>(&events, &config, None, |_, v| trace.push(v)).unwrap();
        assert!(trace.len() > 2);
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_empty_and_impossible_input() {
        assert!(matches!(fit_influence::<f64>(&[], &FitConfig::default(), None), Err(Error::Empty(_))));
        let events = vec![ev(0, "x", &[("a", true)])];
        let mut fixed = CascadeParams::new();
        fixed.set_preference("a".into(), "x".into(), 0.0).unwrap();
        assert!(matches!(
            fit_influence::<f64>(&events, &FitConfig::default(), Some(&fixed)),
            Err(Error::NonFiniteLikelihood)
        ));
        let bad = FitConfig { tol: 0.0, ..FitConfig::default() };
        assert!(fit_influence::<f64>(&events, &bad, None).is_err());
    }

    #[test]
    fn config_reads_partial_toml_like_json() {
        let c: FitConfig = serde_json::from_str(r#"{"pref_source":"free-variable","l2_penalty":0.0001}"#).unwrap();
        assert_eq!(c.pref_source, PrefSource::FreeVariable);
        assert_eq!(c.max_iters, 5000);
    }
}
