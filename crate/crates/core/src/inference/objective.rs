//! Penalized log-likelihood of a set of cascade events in logit space.
//!
//! With `q = 1 - p(u|i)` and `b = 1 - p(v|u)`, the probability of a
//! negative vote is `q * prod b` over earlier positive voters and the
//! positive probability takes the remaining mass (the binding constraint
//! `r = 1 - q * prod b`). Every free probability is `sigmoid(theta)`, so
//! `log q = -softplus(theta)` and the objective is smooth in `theta`.

use std::collections::{BTreeMap, BTreeSet};

use super::{FitConfig, PrefSource};
use crate::cascade::{CascadeEvent, CascadeParams};
use crate::error::{Error, Result};
use crate::ids::{ItemId, UserId};
use crate::scalar::{sigmoid, softplus, Scalar};

/// Logits are kept inside `[-LOGIT_BOUND, LOGIT_BOUND]`.
pub const LOGIT_BOUND: f64 = 12.0;
/// Starting logit of free preferences (probability 0.5).
pub const INITIAL_PREF_LOGIT: f64 = 0.0;
/// Starting logit of free influences (probability ~0.12).
pub const INITIAL_INFLUENCE_LOGIT: f64 = -2.0;
/// A pair `(v, u)` gets a free influence only if `v` voted positive before
/// `u` voted at least this many times.
pub const MIN_COOCCURRENCE: usize = 1;

/// What a coordinate of the logit vector stands for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParamKey {
    Preference { user: UserId, item: ItemId },
    Influence { influencer: UserId, influencee: UserId },
}

#[derive(Debug, Clone)]
struct Observation<T> {
    positive: bool,
    /// `log q` when the preference is a known constant.
    fixed_log_q: T,
    pref: Option<usize>,
    infl_start: usize,
    infl_end: usize,
}

/// Compiled form of a fitting problem: which parameters are free, and for
/// every vote, which of them enter its probability.
#[derive(Debug, Clone)]
pub struct LikelihoodProblem<T> {
    keys: Vec<ParamKey>,
    initial: Vec<T>,
    observations: Vec<Observation<T>>,
    infl_terms: Vec<usize>,
    penalty: T,
    base: CascadeParams<T>,
}

impl<T: Scalar> LikelihoodProblem<T> {
    /// Builds the problem. With a fixed preference source, `fixed_pref`
    /// supplies `p(u|i)` (missing pairs use its default).
    pub fn new(events: &[CascadeEvent], config: &FitConfig, fixed_pref: Option<&CascadeParams<T>>) -> Result<Self> {
        config.validate()?;
        if events.is_empty() {
            return Err(Error::Empty("event list"));
        }
        let fixed = match (config.pref_source, fixed_pref) {
            (PrefSource::FreeVariable, _) => None,
            (_, Some(p)) => Some(p),
            (source, None) => {
                return Err(Error::InvalidConfig(format!(
                    "preference source {source:?} needs fixed preferences"
                )))
            }
        };
        for e in events {
            e.validate()?;
        }

        // Influence pairs that actually co-occur, and observed (user, item) pairs.
        let mut cooccur: BTreeMap<(UserId, UserId), usize> = BTreeMap::new();
        let mut observed: BTreeSet<(UserId, ItemId)> = BTreeSet::new();
        for e in events {
            let mut positives: Vec<&UserId> = Vec::new();
            for vote in &e.votes {
                observed.insert((vote.user.clone(), e.item_id.clone()));
                for &v in &positives {
                    *cooccur.entry((v.clone(), vote.user.clone())).or_default() += 1;
                }
                if vote.value.is_positive() {
                    positives.push(&vote.user);
                }
            }
        }

        let mut keys = Vec::new();
        let mut initial = Vec::new();
        let mut pref_index: BTreeMap<(UserId, ItemId), usize> = BTreeMap::new();
        if fixed.is_none() {
            for (u, i) in observed {
                pref_index.insert((u.clone(), i.clone()), keys.len());
                keys.push(ParamKey::Preference { user: u, item: i });
                initial.push(T::of(INITIAL_PREF_LOGIT));
            }
        }
        let mut infl_index: BTreeMap<(UserId, UserId), usize> = BTreeMap::new();
        for ((v, u), count) in cooccur {
            if count >= MIN_COOCCURRENCE {
                infl_index.insert((v.clone(), u.clone()), keys.len());
                keys.push(ParamKey::Influence { influencer: v, influencee: u });
                initial.push(T::of(INITIAL_INFLUENCE_LOGIT));
            }
        }

        let mut observations = Vec::new();
        let mut infl_terms = Vec::new();
        for e in events {
            let mut positives: Vec<&UserId> = Vec::new();
            for vote in &e.votes {
                let infl_start = infl_terms.len();
                for &v in &positives {
                    if let Some(&k) = infl_index.get(&(v.clone(), vote.user.clone())) {
                        infl_terms.push(k);
                    }
                }
                let (pref, fixed_log_q) = match fixed {
                    Some(p) => (None, (T::one() - p.preference(&vote.user, &e.item_id)).ln()),
                    None => (Some(pref_index[&(vote.user.clone(), e.item_id.clone())]), T::zero()),
                };
                observations.push(Observation {
                    positive: vote.value.is_positive(),
                    fixed_log_q,
                    pref,
                    infl_start,
                    infl_end: infl_terms.len(),
                });
                if vote.value.is_positive() {
                    positives.push(&vote.user);
                }
            }
        }

        let base = match fixed {
            Some(p) => p.without_influence(),
            None => CascadeParams::new(),
        };
        Ok(Self {
            keys,
            initial,
            observations,
            infl_terms,
            penalty: T::of(config.l2_penalty),
            base,
        })
    }

    pub fn dimension(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[ParamKey] {
        &self.keys
    }

    pub fn observation_count(&self) -> usize {
        self.observations.len()
    }

    /// Starting point: preferences at logit 0, influences at logit -2.
    pub fn initial_logits(&self) -> Vec<T> {
        self.initial.clone()
    }

    /// Unpenalized log-likelihood.
    pub fn log_likelihood(&self, logits: &[T]) -> T {
        self.evaluate(logits, None) + self.penalty_term(logits)
    }

    /// Penalized objective `LL - (lambda/2) * |theta|^2`.
    pub fn objective(&self, logits: &[T]) -> T {
        self.evaluate(logits, None)
    }

    /// Penalized objective and its gradient.
    pub fn value_and_gradient(&self, logits: &[T]) -> (T, Vec<T>) {
        let mut grad = vec![T::zero(); logits.len()];
        let value = self.evaluate(logits, Some(&mut grad));
        (value, grad)
    }

    fn penalty_term(&self, logits: &[T]) -> T {
        self.penalty * T::half() * logits.iter().map(|&t| t * t).sum::<T>()
    }

    fn evaluate(&self, logits: &[T], mut grad: Option<&mut Vec<T>>) -> T {
        assert_eq!(logits.len(), self.keys.len(), "logit vector has the wrong length");
        let mut total = T::zero();
        for obs in &self.observations {
            let terms = &self.infl_terms[obs.infl_start..obs.infl_end];
            let mut log_all_tails = match obs.pref {
                Some(k) => -softplus(logits[k]),
                None => obs.fixed_log_q,
            };
            for &k in terms {
                log_all_tails -= softplus(logits[k]);
            }
            // d(log Pr)/d(log_all_tails): 1 for a negative vote,
            // -1/expm1(-S) for a positive one.
            let slope = if obs.positive {
                if log_all_tails >= T::zero() {
                    return T::neg_infinity();
                }
                total += (-log_all_tails.exp_m1()).ln();
                -T::one() / (-log_all_tails).exp_m1()
            } else {
                if log_all_tails == T::neg_infinity() {
                    return T::neg_infinity();
                }
                total += log_all_tails;
                T::one()
            };
            if let Some(g) = grad.as_deref_mut() {
                // d(log_all_tails)/d(theta) = -sigmoid(theta)
                if let Some(k) = obs.pref {
                    g[k] -= slope * sigmoid(logits[k]);
                }
                for &k in terms {
                    g[k] -= slope * sigmoid(logits[k]);
                }
            }
        }
        if let Some(g) = grad {
            for (gk, &t) in g.iter_mut().zip(logits) {
                *gk -= self.penalty * t;
            }
        }
        total - self.penalty_term(logits)
    }

    /// Parameters implied by a logit vector. Frozen influences stay absent
    /// (zero); fixed preferences are carried over unchanged.
    pub fn to_params(&self, logits: &[T]) -> CascadeParams<T> {
        let mut params = self.base.clone();
        for (key, &t) in self.keys.iter().zip(logits) {
            let p = sigmoid(t);
            let res = match key {
                ParamKey::Preference { user, item } => params.set_preference(user.clone(), item.clone(), p),
                ParamKey::Influence { influencer, influencee } => {
                    params.set_influence(influencer.clone(), influencee.clone(), p)
                }
            };
            res.expect("sigmoid output is a probability");
        }
        params
    }
}

/// Penalized log-likelihood and gradient at `logits` for the problem defined
/// by `events` and `config` (free-variable or fixed preferences).
pub fn log_likelihood_and_gradient<T: Scalar>(
    logits: &[T],
    events: &[CascadeEvent],
    config: &FitConfig,
    fixed_pref: Option<&CascadeParams<T>>,
) -> Result<(T, Vec<T>)> {
    let problem = LikelihoodProblem::new(events, config, fixed_pref)?;
    if logits.len() != problem.dimension() {
        return Err(Error::InvalidConfig(format!(
            "expected {} logits, got {}",
            problem.dimension(),
            logits.len()
        )));
    }
    if logits.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidConfig("logits must be finite".into()));
    }
    Ok(problem.value_and_gradient(logits))
}
