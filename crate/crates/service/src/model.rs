//! Event records and the payloads derived from them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use concord_core::recommender::{GeoPoint, RankFilters};
use concord_core::{EventId, ItemId, UserId, Vote};

use crate::error::{Result, ServiceError};

/// Option ids are local to an event: `o1`, `o2`, ...
pub type OptionId = String;

pub const MAX_COMMENT_CHARS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: UserId,
    pub name: String,
    pub address: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDetails {
    pub category: String,
    pub datetime: String,
    pub location: GeoPoint,
    /// Optional search radius around `location` for recommendations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_km: Option<f64>,
}

impl EventDetails {
    pub fn validate(&self) -> Result<()> {
        if self.category.trim().is_empty() || self.datetime.trim().is_empty() {
            return Err(ServiceError::Invalid("event details need a category and a date/time".into()));
        }
        let GeoPoint { lat, lon } = self.location;
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(ServiceError::Invalid(format!("location ({lat}, {lon}) is not a valid coordinate")));
        }
        if let Some(r) = self.radius_km {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ServiceError::Invalid(format!("radius_km must be positive, got {r}")));
            }
        }
        Ok(())
    }

    pub fn filters(&self) -> RankFilters {
        RankFilters {
            category: Some(self.category.clone()),
            datetime: Some(self.datetime.clone()),
            location: Some(self.location),
            radius_km: self.radius_km,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionRecord {
    pub option_id: OptionId,
    pub item_id: ItemId,
    pub added_by: UserId,
    pub added_ts: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub value: Vote,
    pub ts: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub user: UserId,
    pub text: String,
    pub ts: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: EventId,
    pub admin: UserId,
    pub members: BTreeSet<UserId>,
    pub details: EventDetails,
    pub created_ts: i64,
    pub options: Vec<OptionRecord>,
    /// Current vote per option and user.
    pub votes: BTreeMap<OptionId, BTreeMap<UserId, VoteRecord>>,
    /// The first vote each user cast per option; re-votes never touch it.
    pub first_votes: BTreeMap<OptionId, BTreeMap<UserId, VoteRecord>>,
    pub comments: Vec<Comment>,
    pub state: EventState,
    pub final_decision: Option<OptionId>,
    /// Last timestamp handed out for this event.
    pub last_ts: i64,
}

impl EventRecord {
    pub fn option(&self, option_id: &str) -> Option<&OptionRecord> {
        self.options.iter().find(|o| o.option_id == option_id)
    }

    pub fn has_item(&self, item: &ItemId) -> bool {
        self.options.iter().any(|o| &o.item_id == item)
    }

    pub fn next_option_id(&self) -> OptionId {
        format!("o{}", self.options.len() + 1)
    }

    pub fn is_open(&self) -> bool {
        self.state == EventState::Open
    }

    pub fn tally(&self) -> Tally {
        let options = self
            .options
            .iter()
            .map(|o| {
                let mut t = OptionTally {
                    option_id: o.option_id.clone(),
                    positives: 0,
                    negatives: 0,
                    voters: Vec::new(),
                };
                for (user, v) in self.votes.get(&o.option_id).into_iter().flatten() {
                    match v.value {
                        Vote::Positive => t.positives += 1,
                        Vote::Negative => t.negatives += 1,
                    }
                    t.voters.push(Voter { user: user.clone(), value: v.value });
                }
                t
            })
            .collect();
        Tally { event_id: self.event_id.clone(), options }
    }

    /// Automatic decision: most positive votes, ties to the option added
    /// first.
    pub fn leading_option(&self) -> Option<&OptionRecord> {
        let positives = |o: &OptionRecord| {
            self.votes
                .get(&o.option_id)
                .map_or(0, |m| m.values().filter(|v| v.value.is_positive()).count())
        };
        let mut best: Option<(&OptionRecord, usize)> = None;
        for o in &self.options {
            let p = positives(o);
            let better = match best {
                None => true,
                Some((b, bp)) => p > bp || (p == bp && o.added_ts < b.added_ts),
            };
            if better {
                best = Some((o, p));
            }
        }
        best.map(|(o, _)| o)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Voter {
    pub user: UserId,
    pub value: Vote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionTally {
    pub option_id: OptionId,
    pub positives: usize,
    pub negatives: usize,
    pub voters: Vec<Voter>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub event_id: EventId,
    pub options: Vec<OptionTally>,
}

impl Tally {
    pub fn get(&self, option_id: &str) -> Option<&OptionTally> {
        self.options.iter().find(|t| t.option_id == option_id)
    }
}

/// Capability link: the token alone identifies user and event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessToken {
    pub token: String,
    pub user: UserId,
    pub event: EventId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoticeKind {
    Invitation,
    OptionAdded,
    Summary,
}

/// One entry of the notifier log, which stands in for e-mail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub kind: NoticeKind,
    pub event_id: EventId,
    pub to: UserId,
    pub ts: i64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionView {
    pub option_id: OptionId,
    pub item_id: ItemId,
    pub title: String,
    pub link: String,
    pub added_by: UserId,
    pub added_ts: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub item_id: ItemId,
    pub title: String,
    pub score: f64,
    pub member_predictions: Vec<f64>,
}

/// Everything the voting page shows, taken from one consistent snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventView {
    pub event_id: EventId,
    pub me: UserId,
    pub is_admin: bool,
    pub admin: UserId,
    pub members: Vec<UserId>,
    pub details: EventDetails,
    pub state: EventState,
    pub final_decision: Option<OptionId>,
    pub options: Vec<OptionView>,
    pub tally: Tally,
    /// Who voted what: member -> option -> vote.
    pub member_votes: BTreeMap<UserId, BTreeMap<OptionId, Vote>>,
    pub comments: Vec<Comment>,
    pub recommendations: Vec<Recommendation>,
    /// Suggested refresh interval for clients that poll this view.
    pub poll_interval_ms: u64,
}
