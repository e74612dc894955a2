//! Running-average vote histories.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascade::Vote;
use crate::error::Result;
use crate::ids::{ItemId, UserId};

/// Mean of a user's binary votes on one item and how many votes went in.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub s: f64,
    pub n: u64,
}

impl HistoryEntry {
    pub fn record(&mut self, vote: Vote) {
        let n = self.n as f64;
        self.s = (self.s * n + f64::from(vote.as_u8())) / (n + 1.0);
        self.n += 1;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HistoryRow {
    user: UserId,
    item: ItemId,
    s: f64,
    n: u64,
}

/// Per-user running averages. Serialized as `[{user, item, s, n}, ...]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<HistoryRow>", into = "Vec<HistoryRow>")]
pub struct UserHistory {
    entries: BTreeMap<UserId, BTreeMap<ItemId, HistoryEntry>>,
}

impl From<Vec<HistoryRow>> for UserHistory {
    fn from(rows: Vec<HistoryRow>) -> Self {
        let mut h = UserHistory::default();
        for r in rows {
            h.entries
                .entry(r.user)
                .or_default()
                .insert(r.item, HistoryEntry { s: r.s, n: r.n });
        }
        h
    }
}

impl From<UserHistory> for Vec<HistoryRow> {
    fn from(h: UserHistory) -> Self {
        h.entries
            .into_iter()
            .flat_map(|(user, m)| {
                m.into_iter().map(move |(item, e)| HistoryRow {
                    user: user.clone(),
                    item,
                    s: e.s,
                    n: e.n,
                })
            })
            .collect()
    }
}

impl UserHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Folds one vote into the running average: `s' = (s*n + y)/(n+1)`.
    pub fn update(&mut self, user: &UserId, item: &ItemId, vote: Vote) {
        self.entries
            .entry(user.clone())
            .or_default()
            .entry(item.clone())
            .or_default()
            .record(vote);
    }

    pub fn get(&self, user: &UserId, item: &ItemId) -> Option<HistoryEntry> {
        self.entries.get(user).and_then(|m| m.get(item)).copied()
    }

    /// Items the user has voted on, with their averages.
    pub fn items_of<'a>(&'a self, user: &UserId) -> impl Iterator<Item = (&'a ItemId, HistoryEntry)> + 'a {
        self.entries
            .get(user)
            .into_iter()
            .flat_map(|m| m.iter().map(|(i, e)| (i, *e)))
    }

    pub fn is_empty_for(&self, user: &UserId) -> bool {
        self.entries.get(user).is_none_or(BTreeMap::is_empty)
    }

    /// Copy holding only the given users' rows.
    pub fn restricted_to<'a>(&self, users: impl IntoIterator<Item = &'a UserId>) -> Self {
        let entries = users
            .into_iter()
            .filter_map(|u| self.entries.get(u).map(|m| (u.clone(), m.clone())))
            .collect();
        Self { entries }
    }

    /// Rebuilds histories from a full vote list.
    pub fn from_votes<'a>(votes: impl IntoIterator<Item = (&'a UserId, &'a ItemId, Vote)>) -> Self {
        let mut h = Self::new();
        for (u, i, v) in votes {
            h.update(u, i, v);
        }
        h
    }
}
