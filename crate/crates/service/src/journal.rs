//! Append-only journal of mutations plus periodic snapshots.
//!
//! `journal.jsonl` holds one [`Entry`] per line and is never rewritten.
//! `snapshot.json` holds a full [`StateImage`] and the number of journal
//! entries it already includes. Recovery loads the snapshot and replays the
//! remaining entries.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use concord_core::recommender::UserHistory;
use concord_core::{EventId, UserId, Vote};

use crate::error::{Result, ServiceError};
use crate::model::{Comment, EventDetails, EventRecord, Notification, OptionId, OptionRecord, UserRecord};

pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

/// One state change, with every server-assigned value already filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Entry {
    RegisterUser {
        user: UserRecord,
    },
    CreateEvent {
        event_id: EventId,
        admin: UserId,
        details: EventDetails,
        members: Vec<UserId>,
        options: Vec<OptionRecord>,
        tokens: BTreeMap<UserId, String>,
        ts: i64,
    },
    AddOption {
        event_id: EventId,
        option: OptionRecord,
    },
    CastVote {
        event_id: EventId,
        user: UserId,
        option_id: OptionId,
        value: Vote,
        ts: i64,
    },
    AddComment {
        event_id: EventId,
        comment: Comment,
    },
    Close {
        event_id: EventId,
        by: UserId,
        decision: OptionId,
        overridden: bool,
        ts: i64,
    },
}

/// Complete service state in a canonical, serializable form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateImage {
    pub users: Vec<UserRecord>,
    pub events: Vec<EventRecord>,
    /// token -> (user, event), sorted by token.
    pub tokens: Vec<(String, UserId, EventId)>,
    pub history: UserHistory,
    pub notifications: Vec<Notification>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    entries: u64,
    state: StateImage,
}

pub struct Journal {
    dir: PathBuf,
    out: BufWriter<File>,
    entries: u64,
}

impl Journal {
    /// Opens `dir`, returning the snapshot state (if any) and the journal
    /// entries written after it.
    pub fn open(dir: impl AsRef<Path>) -> Result<(Self, Option<StateImage>, Vec<Entry>)> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let snapshot: Option<Snapshot> = match fs::read(dir.join(SNAPSHOT_FILE)) {
            Ok(bytes) => Some(serde_json::from_slice(&bytes)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        let journal_path = dir.join(JOURNAL_FILE);
        let all = match File::open(&journal_path) {
            Ok(f) => read_entries(BufReader::new(f))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let skip = snapshot.as_ref().map_or(0, |s| s.entries);
        if skip > all.len() as u64 {
            return Err(ServiceError::Journal(format!(
                "snapshot covers {skip} entries but the journal has only {}",
                all.len()
            )));
        }
        let entries = all.len() as u64;
        let pending = all.into_iter().skip(skip as usize).collect();
        let file = OpenOptions::new().create(true).append(true).open(&journal_path)?;
        let journal = Journal {
            dir,
            out: BufWriter::new(file),
            entries,
        };
        Ok((journal, snapshot.map(|s| s.state), pending))
    }

    pub fn append(&mut self, entry: &Entry) -> Result<()> {
        serde_json::to_writer(&mut self.out, entry)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.entries += 1;
        Ok(())
    }

    pub fn entries(&self) -> u64 {
        self.entries
    }

    /// Writes the snapshot atomically (temp file, then rename).
    pub fn snapshot(&mut self, state: StateImage) -> Result<()> {
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let snap = Snapshot { entries: self.entries, state };
        {
            let mut f = BufWriter::new(File::create(&tmp)?);
            serde_json::to_writer(&mut f, &snap)?;
            f.flush()?;
            f.get_ref().sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }
}

/// Parses journal lines. A torn final line (no trailing newline, e.g. after
/// a crash mid-write) is ignored; any other malformed line is an error.
pub fn read_entries<R: BufRead>(mut input: R) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        number += 1;
        let complete = line.ends_with('\n');
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str(text) {
            Ok(entry) => entries.push(entry),
            Err(_) if !complete => break,
            Err(e) => return Err(ServiceError::Journal(format!("line {number}: {e}"))),
        }
    }
    Ok(entries)
}
