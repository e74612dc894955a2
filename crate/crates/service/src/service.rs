//! Event lifecycle operations.
//!
//! Locks are always taken in this order: user registry, event map, one
//! event record, token map, shared state (histories, notifier log,
//! journal). Every mutation is validated under its event lock, then
//! journaled and applied while the shared lock is held, so journal order
//! is the order in which changes took effect.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use concord_core::recommender::{rank_for_group, Catalog, UserHistory};
use concord_core::{CascadeEvent, CastVote, EventId, ItemId, UserId, Vote};

use crate::clock::{Clock, SystemClock};
use crate::config::ServiceConfig;
use crate::error::{Result, ServiceError};
use crate::journal::{Entry, Journal, StateImage};
use crate::model::{
    AccessToken, Comment, EventDetails, EventRecord, EventState, EventView, NoticeKind, Notification, OptionId,
    OptionRecord, OptionView, Recommendation, Tally, UserRecord, MAX_COMMENT_CHARS,
};

/// Request body of [`Service::create_event`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewEvent {
    /// Registered user id of the admin.
    #[serde(default)]
    pub admin: Option<UserId>,
    /// Alternatively, any access token the admin holds.
    #[serde(default)]
    pub admin_token: Option<String>,
    pub details: EventDetails,
    /// User ids or addresses. Unknown addresses are registered on the fly.
    #[serde(default)]
    pub invitees: Vec<String>,
    #[serde(default)]
    pub options: Vec<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedEvent {
    pub event_id: EventId,
    pub tokens: BTreeMap<UserId, String>,
}

#[derive(Default)]
struct Registry {
    users: BTreeMap<UserId, UserRecord>,
    by_address: HashMap<String, UserId>,
}

impl Registry {
    fn insert(&mut self, user: UserRecord) {
        self.by_address.insert(normalize_address(&user.address), user.user_id.clone());
        self.users.insert(user.user_id.clone(), user);
    }
}

#[derive(Default)]
struct Shared {
    history: UserHistory,
    notifications: Vec<Notification>,
    journal: Option<Journal>,
}

impl Shared {
    /// Journals `entry`; returns whether a snapshot is due.
    fn record(&mut self, entry: &Entry, snapshot_every: u64) -> Result<bool> {
        match self.journal.as_mut() {
            Some(j) => {
                j.append(entry)?;
                Ok(j.entries() % snapshot_every == 0)
            }
            None => Ok(false),
        }
    }
}

fn normalize_address(address: &str) -> String {
    address.trim().to_lowercase()
}

/// The consensus service. All methods take `&self` and are safe to call
/// from many threads.
pub struct Service {
    catalog: Arc<Catalog>,
    config: ServiceConfig,
    clock: Box<dyn Clock>,
    rng: Mutex<StdRng>,
    registry: RwLock<Registry>,
    events: RwLock<BTreeMap<EventId, Arc<Mutex<EventRecord>>>>,
    tokens: RwLock<HashMap<String, AccessToken>>,
    shared: Mutex<Shared>,
}

impl Service {
    /// In-memory service (nothing is persisted).
    pub fn new(catalog: Catalog, config: ServiceConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            catalog: Arc::new(catalog),
            config,
            clock: Box::new(SystemClock),
            rng: Mutex::new(StdRng::from_entropy()),
            registry: RwLock::default(),
            events: RwLock::default(),
            tokens: RwLock::default(),
            shared: Mutex::default(),
        })
    }

    /// Service persisted in `dir`: recovers from the snapshot and journal
    /// found there, then journals every further change.
    pub fn open(catalog: Catalog, config: ServiceConfig, dir: impl AsRef<Path>) -> Result<Self> {
        let service = Self::new(catalog, config)?;
        let (journal, image, pending) = Journal::open(dir)?;
        if let Some(image) = image {
            service.restore(image);
        }
        for entry in pending {
            service.replay(entry)?;
        }
        service.shared.lock().journal = Some(journal);
        Ok(service)
    }

    pub fn with_clock(mut self, clock: impl Clock + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    /// Seeds the token generator, for reproducible tests only.
    pub fn with_token_seed(self, seed: u64) -> Self {
        *self.rng.lock() = StdRng::seed_from_u64(seed);
        self
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn register_user(&self, name: &str, address: &str) -> Result<UserId> {
        if name.trim().is_empty() || address.trim().is_empty() {
            return Err(ServiceError::Invalid("name and address are required".into()));
        }
        let mut registry = self.registry.write();
        if let Some(id) = registry.by_address.get(&normalize_address(address)) {
            return Ok(id.clone());
        }
        let user = UserRecord {
            user_id: UserId::new(format!("u{}", registry.users.len() + 1)),
            name: name.trim().to_string(),
            address: address.trim().to_string(),
        };
        let id = user.user_id.clone();
        let snapshot_due = self.commit_user(&mut registry, user)?;
        drop(registry);
        self.snapshot_if(snapshot_due)?;
        Ok(id)
    }

    fn commit_user(&self, registry: &mut Registry, user: UserRecord) -> Result<bool> {
        let mut shared = self.shared.lock();
        let due = shared.record(&Entry::RegisterUser { user: user.clone() }, self.config.snapshot_every)?;
        registry.insert(user);
        Ok(due)
    }

    pub fn user(&self, id: &UserId) -> Option<UserRecord> {
        self.registry.read().users.get(id).cloned()
    }

    pub fn create_event(&self, request: NewEvent) -> Result<CreatedEvent> {
        request.details.validate()?;
        let mut items = BTreeSet::new();
        for item in &request.options {
            if !self.catalog.contains(item) {
                return Err(ServiceError::UnknownItem(item.clone()));
            }
            if !items.insert(item) {
                return Err(ServiceError::DuplicateOption(item.clone()));
            }
        }
        let token_admin = match &request.admin_token {
            Some(t) => Some(self.resolve(t)?.user),
            None => None,
        };

        let mut registry = self.registry.write();
        let admin = match (request.admin, token_admin) {
            (Some(a), Some(b)) if a != b => {
                return Err(ServiceError::Invalid("admin and admin_token name different users".into()))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(ServiceError::Invalid("admin or admin_token is required".into())),
        };
        if !registry.users.contains_key(&admin) {
            return Err(ServiceError::UnknownUser(admin));
        }
        let mut snapshot_due = false;
        let mut members = BTreeSet::from([admin.clone()]);
        for invitee in &request.invitees {
            let invitee = invitee.trim();
            if invitee.is_empty() {
                continue;
            }
            let id = UserId::new(invitee);
            if registry.users.contains_key(&id) {
                members.insert(id);
            } else if let Some(id) = registry.by_address.get(&normalize_address(invitee)) {
                members.insert(id.clone());
            } else {
                let user = UserRecord {
                    user_id: UserId::new(format!("u{}", registry.users.len() + 1)),
                    name: invitee.to_string(),
                    address: invitee.to_string(),
                };
                members.insert(user.user_id.clone());
                snapshot_due |= self.commit_user(&mut registry, user)?;
            }
        }

        let mut events = self.events.write();
        let event_id = EventId::new(format!("e{}", events.len() + 1));
        let ts = self.clock.now_ms();
        let options: Vec<OptionRecord> = request
            .options
            .iter()
            .enumerate()
            .map(|(k, item)| OptionRecord {
                option_id: format!("o{}", k + 1),
                item_id: item.clone(),
                added_by: admin.clone(),
                added_ts: ts + 1 + k as i64,
            })
            .collect();

        let mut tokens = self.tokens.write();
        let mut minted = BTreeMap::new();
        for member in &members {
            let token = loop {
                let t = self.mint_token();
                if !tokens.contains_key(&t) {
                    break t;
                }
            };
            minted.insert(member.clone(), token);
        }
        let entry = Entry::CreateEvent {
            event_id: event_id.clone(),
            admin,
            details: request.details,
            members: members.into_iter().collect(),
            options,
            tokens: minted.clone(),
            ts,
        };
        let mut shared = self.shared.lock();
        snapshot_due |= shared.record(&entry, self.config.snapshot_every)?;
        apply_create(&mut events, &mut tokens, &mut shared, entry);
        drop((shared, tokens, events, registry));
        self.snapshot_if(snapshot_due)?;
        Ok(CreatedEvent { event_id, tokens: minted })
    }

    fn mint_token(&self) -> String {
        let mut bytes = [0u8; 16];
        self.rng.lock().fill_bytes(&mut bytes);
        hex::encode(bytes)
    }

    /// Looks up a capability token. Only exact matches succeed.
    pub fn resolve(&self, token: &str) -> Result<AccessToken> {
        self.tokens.read().get(token).cloned().ok_or(ServiceError::InvalidToken)
    }

    fn event(&self, id: &EventId) -> Result<Arc<Mutex<EventRecord>>> {
        self.events.read().get(id).cloned().ok_or(ServiceError::InvalidToken)
    }

    fn next_ts(&self, record: &EventRecord) -> i64 {
        self.clock.now_ms().max(record.last_ts + 1)
    }

    /// Validates under the event lock via `prepare`, then journals and
    /// applies the resulting entry.
    fn mutate<R>(
        &self,
        token: &str,
        prepare: impl FnOnce(&AccessToken, &EventRecord, i64) -> Result<Entry>,
        finish: impl FnOnce(&EventRecord) -> R,
    ) -> Result<R> {
        let access = self.resolve(token)?;
        let event = self.event(&access.event)?;
        let mut record = event.lock();
        if !record.is_open() {
            return Err(ServiceError::EventClosed);
        }
        let ts = self.next_ts(&record);
        let entry = prepare(&access, &record, ts)?;
        let mut shared = self.shared.lock();
        let due = shared.record(&entry, self.config.snapshot_every)?;
        apply_to_event(&mut record, &mut shared, entry);
        drop(shared);
        let out = finish(&record);
        drop(record);
        self.snapshot_if(due)?;
        Ok(out)
    }

    pub fn add_option(&self, token: &str, item_id: ItemId) -> Result<EventView> {
        if !self.catalog.contains(&item_id) {
            return Err(ServiceError::UnknownItem(item_id));
        }
        self.mutate(
            token,
            |access, record, ts| {
                if record.has_item(&item_id) {
                    return Err(ServiceError::DuplicateOption(item_id));
                }
                Ok(Entry::AddOption {
                    event_id: record.event_id.clone(),
                    option: OptionRecord {
                        option_id: record.next_option_id(),
                        item_id,
                        added_by: access.user.clone(),
                        added_ts: ts,
                    },
                })
            },
            |_| (),
        )?;
        self.get_event_view(token)
    }

    pub fn cast_vote(&self, token: &str, option_id: &str, value: Vote) -> Result<Tally> {
        self.mutate(
            token,
            |access, record, ts| {
                if record.option(option_id).is_none() {
                    return Err(ServiceError::UnknownOption(option_id.to_string()));
                }
                Ok(Entry::CastVote {
                    event_id: record.event_id.clone(),
                    user: access.user.clone(),
                    option_id: option_id.to_string(),
                    value,
                    ts,
                })
            },
            EventRecord::tally,
        )
    }

    pub fn add_comment(&self, token: &str, text: &str) -> Result<EventView> {
        if text.trim().is_empty() {
            return Err(ServiceError::Invalid("comment text is empty".into()));
        }
        let chars = text.chars().count();
        if chars > MAX_COMMENT_CHARS {
            return Err(ServiceError::Invalid(format!(
                "comment has {chars} characters; the limit is {MAX_COMMENT_CHARS}"
            )));
        }
        self.mutate(
            token,
            |access, record, ts| {
                Ok(Entry::AddComment {
                    event_id: record.event_id.clone(),
                    comment: Comment { user: access.user.clone(), text: text.to_string(), ts },
                })
            },
            |_| (),
        )?;
        self.get_event_view(token)
    }

    /// Admin only. Decides on `override_option` if given, otherwise on the
    /// option with most positive votes (ties: added first).
    pub fn close_event(&self, token: &str, override_option: Option<&str>) -> Result<EventView> {
        self.mutate(
            token,
            |access, record, ts| {
                if access.user != record.admin {
                    return Err(ServiceError::NotAdmin);
                }
                let (decision, overridden) = match override_option {
                    Some(o) => match record.option(o) {
                        Some(o) => (o.option_id.clone(), true),
                        None => return Err(ServiceError::UnknownOption(o.to_string())),
                    },
                    None => match record.leading_option() {
                        Some(o) => (o.option_id.clone(), false),
                        None => return Err(ServiceError::NoOptions),
                    },
                };
                Ok(Entry::Close {
                    event_id: record.event_id.clone(),
                    by: access.user.clone(),
                    decision,
                    overridden,
                    ts,
                })
            },
            |_| (),
        )?;
        self.get_event_view(token)
    }

    pub fn get_event_view(&self, token: &str) -> Result<EventView> {
        self.view_with(token, self.config.recommender.k)
    }

    pub fn recommendations(&self, token: &str, k: usize) -> Result<Vec<Recommendation>> {
        Ok(self.view_with(token, k)?.recommendations)
    }

    fn view_with(&self, token: &str, k: usize) -> Result<EventView> {
        let access = self.resolve(token)?;
        let event = self.event(&access.event)?;
        let (record, history) = {
            let record = event.lock();
            let history = self.shared.lock().history.restricted_to(&record.members);
            (record.clone(), history)
        };

        let members: Vec<UserId> = record.members.iter().cloned().collect();
        let rec = &self.config.recommender;
        let ranked = rank_for_group(
            &members,
            &self.catalog,
            &history,
            rec.weights(members.len())?,
            &record.details.filters(),
            rec.alpha,
            k,
        )?;
        let recommendations = ranked
            .into_iter()
            .map(|s| Recommendation {
                title: self.catalog.get(&s.item_id).map(|i| i.title.clone()).unwrap_or_default(),
                item_id: s.item_id,
                score: s.score,
                member_predictions: s.member_predictions,
            })
            .collect();
        let options = record
            .options
            .iter()
            .map(|o| {
                let item = self.catalog.get(&o.item_id);
                OptionView {
                    option_id: o.option_id.clone(),
                    item_id: o.item_id.clone(),
                    title: item.map(|i| i.title.clone()).unwrap_or_default(),
                    link: item.map(|i| i.link.clone()).unwrap_or_default(),
                    added_by: o.added_by.clone(),
                    added_ts: o.added_ts,
                }
            })
            .collect();
        let mut member_votes: BTreeMap<UserId, BTreeMap<OptionId, Vote>> =
            members.iter().map(|m| (m.clone(), BTreeMap::new())).collect();
        for (option, votes) in &record.votes {
            for (user, v) in votes {
                member_votes.entry(user.clone()).or_default().insert(option.clone(), v.value);
            }
        }
        Ok(EventView {
            event_id: record.event_id.clone(),
            is_admin: access.user == record.admin,
            me: access.user,
            admin: record.admin.clone(),
            members,
            details: record.details.clone(),
            state: record.state,
            final_decision: record.final_decision.clone(),
            options,
            tally: record.tally(),
            member_votes,
            comments: record.comments.clone(),
            recommendations,
            poll_interval_ms: self.config.poll_interval_ms,
        })
    }

    /// One cascade event per option that received votes, built from each
    /// member's first vote on it. Events created before `since` are skipped.
    pub fn export_event_log(&self, since: Option<i64>) -> Vec<CascadeEvent> {
        let events: Vec<Arc<Mutex<EventRecord>>> = self.events.read().values().cloned().collect();
        let mut out = Vec::new();
        for event in events {
            let record = event.lock();
            if since.is_some_and(|s| record.created_ts < s) {
                continue;
            }
            for option in &record.options {
                let Some(first) = record.first_votes.get(&option.option_id) else {
                    continue;
                };
                let mut votes: Vec<CastVote> = first
                    .iter()
                    .map(|(user, v)| CastVote { user: user.clone(), value: v.value, ts: v.ts })
                    .collect();
                votes.sort_by(|a, b| a.ts.cmp(&b.ts).then_with(|| a.user.cmp(&b.user)));
                out.push(CascadeEvent {
                    event_id: EventId::new(format!("{}:{}", record.event_id, option.option_id)),
                    item_id: option.item_id.clone(),
                    group: record.members.iter().cloned().collect(),
                    votes,
                    created_ts: Some(option.added_ts),
                });
            }
        }
        out
    }

    pub fn notifications(&self) -> Vec<Notification> {
        self.shared.lock().notifications.clone()
    }

    pub fn history(&self) -> UserHistory {
        self.shared.lock().history.clone()
    }

    /// Canonical copy of the full state. Takes every lock, so it is a
    /// consistent cut.
    pub fn state_image(&self) -> StateImage {
        self.with_cut(|image, _| image)
    }

    fn with_cut<R>(&self, f: impl FnOnce(StateImage, &mut Shared) -> R) -> R {
        let registry = self.registry.read();
        let events = self.events.read();
        let guards: Vec<_> = events.values().map(|e| e.lock()).collect();
        let tokens = self.tokens.read();
        let mut shared = self.shared.lock();
        let mut token_rows: Vec<(String, UserId, EventId)> =
            tokens.values().map(|t| (t.token.clone(), t.user.clone(), t.event.clone())).collect();
        token_rows.sort();
        let mut records: Vec<EventRecord> = guards.iter().map(|g| (**g).clone()).collect();
        records.sort_by_key(|r| event_number(&r.event_id));
        let image = StateImage {
            users: registry.users.values().cloned().collect(),
            events: records,
            tokens: token_rows,
            history: shared.history.clone(),
            notifications: shared.notifications.clone(),
        };
        f(image, &mut shared)
    }

    fn snapshot_if(&self, due: bool) -> Result<()> {
        if due {
            self.snapshot()?;
        }
        Ok(())
    }

    /// Writes a snapshot now (no-op for in-memory services).
    pub fn snapshot(&self) -> Result<()> {
        self.with_cut(|image, shared| match shared.journal.as_mut() {
            Some(j) => j.snapshot(image),
            None => Ok(()),
        })
    }

    fn restore(&self, image: StateImage) {
        let mut registry = self.registry.write();
        for user in image.users {
            registry.insert(user);
        }
        let mut events = self.events.write();
        for record in image.events {
            events.insert(record.event_id.clone(), Arc::new(Mutex::new(record)));
        }
        let mut tokens = self.tokens.write();
        for (token, user, event) in image.tokens {
            tokens.insert(token.clone(), AccessToken { token, user, event });
        }
        let mut shared = self.shared.lock();
        shared.history = image.history;
        shared.notifications = image.notifications;
    }

    fn replay(&self, entry: Entry) -> Result<()> {
        match entry {
            Entry::RegisterUser { user } => self.registry.write().insert(user),
            create @ Entry::CreateEvent { .. } => {
                let mut events = self.events.write();
                let mut tokens = self.tokens.write();
                let mut shared = self.shared.lock();
                apply_create(&mut events, &mut tokens, &mut shared, create);
            }
            Entry::AddOption { ref event_id, .. }
            | Entry::CastVote { ref event_id, .. }
            | Entry::AddComment { ref event_id, .. }
            | Entry::Close { ref event_id, .. } => {
                let event = self
                    .event(event_id)
                    .map_err(|_| ServiceError::Journal(format!("entry for unknown event {event_id}")))?;
                let mut record = event.lock();
                let mut shared = self.shared.lock();
                apply_to_event(&mut record, &mut shared, entry);
            }
        }
        Ok(())
    }
}

fn event_number(id: &EventId) -> (usize, String) {
    let s = id.as_str();
    (s.trim_start_matches('e').parse().unwrap_or(usize::MAX), s.to_string())
}

fn apply_create(
    events: &mut BTreeMap<EventId, Arc<Mutex<EventRecord>>>,
    tokens: &mut HashMap<String, AccessToken>,
    shared: &mut Shared,
    entry: Entry,
) {
    let Entry::CreateEvent { event_id, admin, details, members, options, tokens: minted, ts } = entry else {
        unreachable!("apply_create called with another entry kind");
    };
    for (user, token) in minted {
        tokens.insert(token.clone(), AccessToken { token, user, event: event_id.clone() });
    }
    for member in &members {
        shared.notifications.push(Notification {
            kind: NoticeKind::Invitation,
            event_id: event_id.clone(),
            to: member.clone(),
            ts,
            message: format!("{admin} invited you to decide on {} at {}", details.category, details.datetime),
        });
    }
    let last_ts = options.iter().map(|o| o.added_ts).max().unwrap_or(ts).max(ts);
    let record = EventRecord {
        event_id: event_id.clone(),
        admin,
        members: members.into_iter().collect(),
        details,
        created_ts: ts,
        options,
        votes: BTreeMap::new(),
        first_votes: BTreeMap::new(),
        comments: Vec::new(),
        state: EventState::Open,
        final_decision: None,
        last_ts,
    };
    events.insert(event_id, Arc::new(Mutex::new(record)));
}

fn apply_to_event(record: &mut EventRecord, shared: &mut Shared, entry: Entry) {
    match entry {
        Entry::AddOption { option, .. } => {
            record.last_ts = record.last_ts.max(option.added_ts);
            for member in &record.members {
                shared.notifications.push(Notification {
                    kind: NoticeKind::OptionAdded,
                    event_id: record.event_id.clone(),
                    to: member.clone(),
                    ts: option.added_ts,
                    message: format!("{} suggested {}; please vote", option.added_by, option.item_id),
                });
            }
            record.options.push(option);
        }
        Entry::CastVote { user, option_id, value, ts, .. } => {
            record.last_ts = record.last_ts.max(ts);
            if let Some(item) = record.option(&option_id).map(|o| o.item_id.clone()) {
                shared.history.update(&user, &item, value);
            }
            let vote = crate::model::VoteRecord { value, ts };
            record.first_votes.entry(option_id.clone()).or_default().entry(user.clone()).or_insert(vote);
            record.votes.entry(option_id).or_default().insert(user, vote);
        }
        Entry::AddComment { comment, .. } => {
            record.last_ts = record.last_ts.max(comment.ts);
            record.comments.push(comment);
        }
        Entry::Close { decision, overridden, ts, .. } => {
            record.last_ts = record.last_ts.max(ts);
            let title = record.option(&decision).map(|o| o.item_id.to_string()).unwrap_or_default();
            let how = if overridden { "chosen by the admin" } else { "most positive votes" };
            for member in &record.members {
                shared.notifications.push(Notification {
                    kind: NoticeKind::Summary,
                    event_id: record.event_id.clone(),
                    to: member.clone(),
                    ts,
                    message: format!("final decision: {title} ({how})"),
                });
            }
            record.state = EventState::Closed;
            record.final_decision = Some(decision);
        }
        Entry::RegisterUser { .. } | Entry::CreateEvent { .. } => {
            unreachable!("not an event-scoped entry")
        }
    }
}
