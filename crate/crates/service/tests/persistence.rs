mod common;

use std::fs;

use concord_core::Vote::{Negative, Positive};
use concord_service::journal::{JOURNAL_FILE, SNAPSHOT_FILE};
use concord_service::{NewEvent, Service, ServiceConfig, StepClock};

use common::*;

fn open(dir: &std::path::Path, snapshot_every: u64) -> Service {
    let config = ServiceConfig { snapshot_every, ..ServiceConfig::default() };
    Service::open(catalog(), config, dir).unwrap().with_clock(StepClock::new(5_000))
}

/// Runs a mixed workload touching every journal entry kind.
fn workload(s: &Service) {
    let admin = s.register_user("Ann", "a@x").unwrap();
    let created = s
        .create_event(NewEvent {
            admin: Some(admin.clone()),
            admin_token: None,
            details: details(),
            invitees: vec!["b@x".into(), "c@x".into()],
            options: vec![item(0), item(1)],
        })
        .unwrap();
    let tokens: Vec<String> = created.tokens.values().cloned().collect();
    let admin_token = created.tokens[&admin].clone();
    for (k, t) in tokens.iter().enumerate() {
        s.cast_vote(t, "o1", if k == 1 { Negative } else { Positive }).unwrap();
        s.add_option(t, item(10 + k)).unwrap();
        s.cast_vote(t, "o2", Positive).unwrap();
        s.add_comment(t, &format!("comment {k}")).unwrap();
    }
    s.cast_vote(&tokens[1], "o1", Positive).unwrap();
    s.close_event(&admin_token, None).unwrap();
    let second = s
        .create_event(NewEvent {
            admin: None,
            admin_token: Some(tokens[2].clone()),
            details: details(),
            invitees: vec!["d@x".into()],
            options: vec![item(7)],
        })
        .unwrap();
    for t in second.tokens.values() {
        s.cast_vote(t, "o1", Positive).unwrap();
    }
}

#[test]
fn replay_reconstructs_state_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let s = open(dir.path(), 1_000_000);
        workload(&s);
        s.state_image()
    };
    assert!(!dir.path().join(SNAPSHOT_FILE).exists());
    let after = open(dir.path(), 1_000_000).state_image();
    assert_eq!(before, after);
    // bit-exact, including floating-point history averages
    assert_eq!(serde_json::to_string(&before).unwrap(), serde_json::to_string(&after).unwrap());
}

#[test]
fn snapshot_plus_tail_recovers_and_keeps_journaling() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let s = open(dir.path(), 7);
        workload(&s);
        s.state_image()
    };
    assert!(dir.path().join(SNAPSHOT_FILE).exists());
    let reopened = open(dir.path(), 7);
    assert_eq!(reopened.state_image(), before);

    // tokens survive restarts and new writes append to the same journal
    let token = before.tokens[0].0.clone();
    let view = reopened.get_event_view(&token).unwrap();
    reopened.add_comment(&token, "after restart").ok();
    let after = reopened.state_image();
    drop(reopened);
    assert_eq!(open(dir.path(), 7).state_image(), after);
    assert!(view.event_id.as_str().starts_with('e'));
}

#[test]
fn snapshot_alone_matches_full_replay() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path(), 1_000_000);
    workload(&s);
    s.snapshot().unwrap();
    let image = s.state_image();
    drop(s);
    // the snapshot covers every entry, so dropping the journal tail is harmless
    assert_eq!(open(dir.path(), 1_000_000).state_image(), image);
}

#[test]
fn torn_final_line_is_ignored_on_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let s = open(dir.path(), 1_000_000);
        workload(&s);
        s.state_image()
    };
    let path = dir.path().join(JOURNAL_FILE);
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("{\"op\":\"add_comm");
    fs::write(&path, text).unwrap();
    assert_eq!(open(dir.path(), 1_000_000).state_image(), before);
}

#[test]
fn corrupt_journal_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(JOURNAL_FILE), "garbage\n").unwrap();
    assert!(Service::open(catalog(), ServiceConfig::default(), dir.path()).is_err());
}
