//! The decision cascade model.
//!
//! Members of a group vote on an item one after another. A member votes
//! positively if at least one of several independent coins lands heads: one
//! coin for their own preference `p(u|i)` and one coin `p(v|u)` for every
//! member `v` who voted positively before them. Negative predecessors carry
//! no influence.

mod params;
mod simulate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ids::{EventId, ItemId, UserId};
use crate::scalar::Scalar;

pub use params::CascadeParams;
pub use simulate::{simulate_dataset, simulate_event, simulate_event_with_rng};

/// A binary vote. Serialized as `0` / `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vote {
    Negative,
    Positive,
}

impl Vote {
    pub fn is_positive(self) -> bool {
        self == Vote::Positive
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Vote::Negative => 0,
            Vote::Positive => 1,
        }
    }

    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            0 => Some(Vote::Negative),
            1 => Some(Vote::Positive),
            _ => None,
        }
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Vote::Positive
        } else {
            Vote::Negative
        }
    }
}

impl fmt::Display for Vote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl Serialize for Vote {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Vote {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = u8::deserialize(deserializer)?;
        Vote::from_u8(raw)
            .ok_or_else(|| serde::de::Error::custom(format!("vote must be 0 or 1, got {raw}")))
    }
}

/// One recorded vote inside a cascade event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastVote {
    pub user: UserId,
    pub value: Vote,
    /// Milliseconds.
    pub ts: i64,
}

/// A group deciding on a single item: `(G, i, {y_u})` plus vote order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeEvent {
    pub event_id: EventId,
    pub item_id: ItemId,
    pub group: Vec<UserId>,
    pub votes: Vec<CastVote>,
    /// Creation time of the originating decision, used for chronological
    /// splits. Absent in older logs; the first vote time stands in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_ts: Option<i64>,
}

impl CascadeEvent {
    /// Checks membership, uniqueness and strict timestamp order.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidEvent {
                event_id: self.event_id.clone(),
                reason,
            })
        };
        if self.group.is_empty() {
            return fail("group is empty".into());
        }
        let members: BTreeSet<&UserId> = self.group.iter().collect();
        if members.len() != self.group.len() {
            return fail("group lists a member twice".into());
        }
        let mut voters = BTreeSet::new();
        let mut last_ts: Option<i64> = None;
        for vote in &self.votes {
            if !members.contains(&vote.user) {
                return fail(format!("voter {} is not a group member", vote.user));
            }
            if !voters.insert(&vote.user) {
                return fail(format!("{} voted more than once", vote.user));
            }
            if let Some(prev) = last_ts {
                if vote.ts <= prev {
                    return fail(format!(
                        "vote timestamps must be strictly increasing ({} after {})",
                        vote.ts, prev
                    ));
                }
            }
            last_ts = Some(vote.ts);
        }
        Ok(())
    }

    /// Timestamp used to order events chronologically.
    pub fn creation_time(&self) -> Option<i64> {
        self.created_ts
            .or_else(|| self.votes.iter().map(|v| v.ts).min())
    }

    pub fn positive_count(&self) -> usize {
        self.votes.iter().filter(|v| v.value.is_positive()).count()
    }
}

/// Probability that `user` votes positively on `item` given the set of
/// members who already voted positively.
///
/// `1 - (1 - p(u|i)) * prod_{v in U+} (1 - p(v|u))`
pub fn positive_probability<'a, T: Scalar>(
    params: &CascadeParams<T>,
    user: &UserId,
    item: &ItemId,
    positive_predecessors: impl IntoIterator<Item = &'a UserId>,
) -> T {
    T::one() - negative_probability(params, user, item, positive_predecessors)
}

/// Complement of [`positive_probability`], computed as the product directly
/// so small values keep their precision.
pub fn negative_probability<'a, T: Scalar>(
    params: &CascadeParams<T>,
    user: &UserId,
    item: &ItemId,
    positive_predecessors: impl IntoIterator<Item = &'a UserId>,
) -> T {
    let mut all_tails = T::one() - params.preference(user, item);
    for v in positive_predecessors {
        if v != user {
            all_tails *= T::one() - params.influence(v, user);
        }
    }
    all_tails
}

/// Log-probability of the observed votes of one event, in timestamp order.
///
/// Returns negative infinity when some vote is impossible under `params`.
pub fn event_log_likelihood<T: Scalar>(params: &CascadeParams<T>, event: &CascadeEvent) -> T {
    let mut total = T::zero();
    let mut positives: Vec<&UserId> = Vec::with_capacity(event.votes.len());
    for vote in &event.votes {
        let negative = negative_probability(
            params,
            &vote.user,
            &event.item_id,
            positives.iter().copied(),
        );
        let prob = match vote.value {
            Vote::Positive => T::one() - negative,
            Vote::Negative => negative,
        };
        if prob <= T::zero() {
            return T::neg_infinity();
        }
        total += prob.ln();
        if vote.value.is_positive() {
            positives.push(&vote.user);
        }
    }
    total
}

/// Group preference under the average strategy: positive votes over group
/// size. Members who did not vote count as negative.
pub fn group_outcome<T: Scalar>(event: &CascadeEvent) -> Result<T> {
    if event.group.is_empty() {
        return Err(Error::Empty("group"));
    }
    let members: BTreeSet<&UserId> = event.group.iter().collect();
    let positives = event
        .votes
        .iter()
        .filter(|v| v.value.is_positive() && members.contains(&v.user))
        .count();
    Ok(T::of_usize(positives) / T::of_usize(event.group.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uid(s: &str) -> UserId {
        UserId::new(s)
    }

    fn event(group: &[&str], votes: &[(&str, u8)]) -> CascadeEvent {
        CascadeEvent {
            event_id: EventId::new("e"),
            item_id: ItemId::new("i"),
            group: group.iter().map(|s| uid(s)).collect(),
            votes: votes
                .iter()
                .enumerate()
                .map(|(k, (u, v))| CastVote {
                    user: uid(u),
                    value: Vote::from_u8(*v).unwrap(),
                    ts: 10 * k as i64,
                })
                .collect(),
            created_ts: None,
        }
    }

    #[test]
    fn empty_predecessors_reduce_to_own_preference() {
        let mut params = CascadeParams::<f64>::new();
        params.set_preference(uid("u"), "i".into(), 0.7).unwrap();
        let p = positive_probability(&params, &uid("u"), &"i".into(), []);
        assert_eq!(p, 0.7);
    }

    #[test]
    fn influence_coins_combine() {
        let mut params = CascadeParams::<f64>::new();
        params.set_preference(uid("u"), "i".into(), 0.2).unwrap();
        params.set_influence(uid("a"), uid("u"), 0.3).unwrap();
        params.set_influence(uid("b"), uid("u"), 0.5).unwrap();
        let preds = [uid("a"), uid("b")];
        let p = positive_probability(&params, &uid("u"), &"i".into(), preds.iter());
        assert!((p - 0.72).abs() < 1e-12);
    }

    #[test]
    fn all_zero_coins_never_fire() {
        let mut params = CascadeParams::<f64>::new();
        params.set_preference(uid("u"), "i".into(), 0.0).unwrap();
        params.set_influence(uid("a"), uid("u"), 0.0).unwrap();
        let preds = [uid("a")];
        assert_eq!(positive_probability(&params, &uid("u"), &"i".into(), preds.iter()), 0.0);
    }

    #[test]
    fn two_positive_votes_likelihood() {
        let mut params = CascadeParams::<f64>::new();
        params.set_preference(uid("a"), "i".into(), 0.5).unwrap();
        params.set_preference(uid("b"), "i".into(), 0.5).unwrap();
        params.set_influence(uid("a"), uid("b"), 0.5).unwrap();
        params.set_influence(uid("b"), uid("a"), 0.5).unwrap();
        let e = event(&["a", "b"], &[("a", 1), ("b", 1)]);
        let ll = event_log_likelihood(&params, &e);
        assert!((ll - 0.375f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn certain_and_impossible_votes() {
        let mut params = CascadeParams::<f64>::new();
        params.set_preference(uid("a"), "i".into(), 0.0).unwrap();
        assert_eq!(event_log_likelihood(&params, &event(&["a"], &[("a", 0)])), 0.0);
        assert_eq!(
            event_log_likelihood(&params, &event(&["a"], &[("a", 1)])),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn negative_predecessors_do_not_influence() {
        let mut params = CascadeParams::<f64>::new();
        params.set_preference(uid("b"), "i".into(), 0.3).unwrap();
        params.set_influence(uid("a"), uid("b"), 0.9).unwrap();
        let with_neg = event(&["a", "b"], &[("a", 0), ("b", 1)]);
        let alone = event(&["b"], &[("b", 1)]);
        let pa = params.preference(&uid("a"), &"i".into());
        let expected = (1.0 - pa).ln() + event_log_likelihood(&params, &alone);
        assert!((event_log_likelihood(&params, &with_neg) - expected).abs() < 1e-12);
    }

    #[test]
    fn group_outcome_averages_over_members() {
        let e = event(&["a", "b", "c", "d"], &[("a", 1), ("b", 0), ("c", 1), ("d", 1)]);
        assert_eq!(group_outcome::<f64>(&e).unwrap(), 0.75);
        let all = event(&["a", "b"], &[("a", 1), ("b", 1)]);
        assert_eq!(group_outcome::<f64>(&all).unwrap(), 1.0);
        let none = event(&["a", "b", "c"], &[]);
        assert_eq!(group_outcome::<f32>(&none).unwrap(), 0.0);
        assert!(group_outcome::<f64>(&event(&[], &[])).is_err());
    }

    #[test]
    fn validation_rejects_malformed_events() {
        assert!(event(&["a", "b"], &[("a", 1), ("b", 0)]).validate().is_ok());
        assert!(event(&[], &[]).validate().is_err());
        assert!(event(&["a"], &[("z", 1)]).validate().is_err());
        assert!(event(&["a", "a"], &[]).validate().is_err());
        assert!(event(&["a"], &[("a", 1), ("a", 0)]).validate().is_err());
        let mut tied = event(&["a", "b"], &[("a", 1), ("b", 0)]);
        tied.votes[1].ts = tied.votes[0].ts;
        assert!(tied.validate().is_err());
    }

    #[test]
    fn vote_serializes_as_bit() {
        let v = CastVote { user: uid("a"), value: Vote::Positive, ts: 5 };
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"user":"a","value":1,"ts":5}"#);
        assert!(serde_json::from_str::<CastVote>(r#"{"user":"a","value":2,"ts":5}"#).is_err());
    }
}
