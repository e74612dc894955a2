mod common;

use std::collections::BTreeMap;

use concord_core::eventlog::{events_to_string, parse_events};
use concord_core::Vote::{Negative, Positive};
use concord_core::{UserId, Vote};
use concord_service::model::{EventRecord, EventState, NoticeKind};
use concord_service::{NewEvent, Service, ServiceError};

use common::*;

/// Recounts every event's tally from its vote map.
fn assert_tallies_fold(service: &Service) {
    for record in service.state_image().events {
        check_fold(&record);
    }
}

fn check_fold(record: &EventRecord) {
    let tally = record.tally();
    for option in &record.options {
        let votes = record.votes.get(&option.option_id).cloned().unwrap_or_default();
        let pos = votes.values().filter(|v| v.value == Positive).count();
        let t = tally.get(&option.option_id).unwrap();
        assert_eq!((t.positives, t.negatives), (pos, votes.len() - pos), "{}", option.option_id);
        assert_eq!(t.voters.len(), votes.len());
    }
}

#[test]
fn registration_is_idempotent_per_address() {
    let s = service();
    let a = s.register_user("Ann", "ann@example.org").unwrap();
    let b = s.register_user("Ann again", "  ANN@example.org ").unwrap();
    let c = s.register_user("Bob", "bob@example.org").unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(matches!(s.register_user("", "x@y"), Err(ServiceError::Invalid(_))));
}

#[test]
fn create_event_issues_one_token_and_invitation_per_member() {
    let s = service();
    let bob = s.register_user("Bob", "b@x").unwrap();
    let f = event_with(s, &[bob.as_str(), "c@x", "B@x"], &[0, 1]);
    assert_eq!(f.members.len(), 2);
    let view = f.service.get_event_view(&f.admin).unwrap();
    assert_eq!(view.members.len(), 3);
    assert!(view.is_admin);
    assert_eq!(view.options.len(), 2);
    let invites = f.service.notifications().into_iter().filter(|n| n.kind == NoticeKind::Invitation).count();
    assert_eq!(invites, 3);
    let tokens: std::collections::BTreeSet<_> = f.members.iter().chain([&f.admin]).collect();
    assert_eq!(tokens.len(), 3);
    assert!(tokens.iter().all(|t| t.len() == 32));
}

#[test]
fn create_event_rejects_bad_input() {
    let s = service();
    let admin = s.register_user("Ann", "a@x").unwrap();
    let base = NewEvent {
        admin: Some(admin),
        admin_token: None,
        details: details(),
        invitees: vec![],
        options: vec![],
    };
    let unknown = NewEvent { options: vec!["nope".into()], ..base.clone() };
    assert!(matches!(s.create_event(unknown), Err(ServiceError::UnknownItem(_))));
    let dup = NewEvent { options: vec![item(1), item(1)], ..base.clone() };
    assert!(matches!(s.create_event(dup), Err(ServiceError::DuplicateOption(_))));
    let nobody = NewEvent { admin: Some("u99".into()), ..base.clone() };
    assert!(matches!(s.create_event(nobody), Err(ServiceError::UnknownUser(_))));
    let mut bad = base.clone();
    bad.details.category = " ".into();
    assert!(matches!(s.create_event(bad), Err(ServiceError::Invalid(_))));
    let forged = NewEvent { admin: None, admin_token: Some("00".repeat(16)), ..base };
    assert!(matches!(s.create_event(forged), Err(ServiceError::InvalidToken)));
}

#[test]
fn admin_token_can_open_another_event() {
    let f = event_with(service(), &["b@x"], &[0]);
    let created = f
        .service
        .create_event(NewEvent {
            admin: None,
            admin_token: Some(f.admin.clone()),
            details: details(),
            invitees: vec![],
            options: vec![item(3)],
        })
        .unwrap();
    assert_eq!(created.event_id.as_str(), "e2");
    let view = f.service.get_event_view(created.tokens.values().next().unwrap()).unwrap();
    assert!(view.is_admin);
}

#[test]
fn first_vote_and_flip() {
    let f = event_with(service(), &["b@x", "c@x"], &[0, 1]);
    let s = &f.service;
    let t = s.cast_vote(&f.members[0], "o1", Positive).unwrap();
    assert_eq!((t.get("o1").unwrap().positives, t.get("o1").unwrap().negatives), (1, 0));
    s.cast_vote(&f.admin, "o1", Positive).unwrap();
    let before = s.cast_vote(&f.members[1], "o1", Negative).unwrap();
    let after = s.cast_vote(&f.admin, "o1", Negative).unwrap();
    let (b, a) = (before.get("o1").unwrap(), after.get("o1").unwrap());
    assert_eq!(a.positives, b.positives - 1);
    assert_eq!(a.negatives, b.negatives + 1);
    assert_eq!(a.voters.len(), b.voters.len());
    assert_tallies_fold(s);

    // read-your-writes
    assert_eq!(s.get_event_view(&f.admin).unwrap().tally, after);
}

#[test]
fn vote_errors() {
    let f = event_with(service(), &["b@x"], &[0]);
    let s = &f.service;
    assert!(matches!(s.cast_vote(&f.admin, "o9", Positive), Err(ServiceError::UnknownOption(_))));
    assert!(matches!(s.cast_vote("not-a-token", "o1", Positive), Err(ServiceError::InvalidToken)));
    let mut near = f.admin.clone();
    let last = near.pop().unwrap();
    near.push(if last == '0' { '1' } else { '0' });
    assert!(matches!(s.cast_vote(&near, "o1", Positive), Err(ServiceError::InvalidToken)));
    assert!(matches!(s.cast_vote(&f.admin.to_uppercase(), "o1", Positive), Err(ServiceError::InvalidToken)));
}

#[test]
fn options_are_deduplicated_and_announced() {
    let f = event_with(service(), &["b@x"], &[0]);
    let s = &f.service;
    let view = s.add_option(&f.members[0], item(5)).unwrap();
    assert_eq!(view.options.len(), 2);
    assert_eq!(view.options[1].option_id, "o2");
    assert_eq!(view.options[1].title, "Place 5");
    assert!(matches!(s.add_option(&f.admin, item(5)), Err(ServiceError::DuplicateOption(_))));
    assert!(matches!(s.add_option(&f.admin, "zz".into()), Err(ServiceError::UnknownItem(_))));
    let notices = s.notifications().into_iter().filter(|n| n.kind == NoticeKind::OptionAdded).count();
    assert_eq!(notices, 2);
}

#[test]
fn comments_bounds_and_order() {
    let f = event_with(service(), &["b@x"], &[0]);
    let s = &f.service;
    let v = s.add_comment(&f.admin, "sounds good").unwrap();
    assert_eq!(v.comments.len(), 1);
    assert!(matches!(s.add_comment(&f.admin, "   "), Err(ServiceError::Invalid(_))));
    assert!(matches!(s.add_comment(&f.admin, &"x".repeat(2001)), Err(ServiceError::Invalid(_))));
    s.add_comment(&f.admin, &"é".repeat(2000)).unwrap();

    let s = std::sync::Arc::new(f.service);
    let handles: Vec<_> = (0..8)
        .map(|w| {
            let s = s.clone();
            let token = if w % 2 == 0 { f.admin.clone() } else { f.members[0].clone() };
            std::thread::spawn(move || {
                for k in 0..25 {
                    s.add_comment(&token, &format!("{w}:{k}")).unwrap();
                }
            })
        })
        .collect();
    handles.into_iter().for_each(|h| h.join().unwrap());
    let comments = s.get_event_view(&f.admin).unwrap().comments;
    assert_eq!(comments.len(), 202);
    assert!(comments.windows(2).all(|w| w[0].ts < w[1].ts));
    for w in 0..8 {
        let mine: Vec<usize> = comments
            .iter()
            .filter_map(|c| c.text.strip_prefix(&format!("{w}:")).map(|k| k.parse().unwrap()))
            .collect();
        assert_eq!(mine, (0..25).collect::<Vec<_>>(), "writer {w}");
    }
}

fn closing_with(positives: &[(usize, usize)], override_option: Option<&str>) -> (String, Service, String) {
    let invitees: Vec<String> = (0..4).map(|k| format!("m{k}@x")).collect();
    let refs: Vec<&str> = invitees.iter().map(String::as_str).collect();
    let f = event_with(service(), &refs, &[0, 1]);
    for &(option, count) in positives {
        for token in f.members.iter().take(count) {
            f.service.cast_vote(token, &format!("o{}", option + 1), Positive).unwrap();
        }
    }
    let view = f.service.close_event(&f.admin, override_option).unwrap();
    (view.final_decision.unwrap(), f.service, f.admin)
}

#[test]
fn close_picks_argmax_ties_and_overrides() {
    assert_eq!(closing_with(&[(0, 3), (1, 1)], None).0, "o1");
    assert_eq!(closing_with(&[(0, 1), (1, 3)], None).0, "o2");
    assert_eq!(closing_with(&[(0, 2), (1, 2)], None).0, "o1");
    assert_eq!(closing_with(&[(0, 3), (1, 1)], Some("o2")).0, "o2");
}

#[test]
fn closed_events_are_read_only() {
    let (_, s, admin) = closing_with(&[(0, 1)], None);
    let view = s.get_event_view(&admin).unwrap();
    assert_eq!(view.state, EventState::Closed);
    assert!(matches!(s.cast_vote(&admin, "o1", Positive), Err(ServiceError::EventClosed)));
    assert!(matches!(s.add_option(&admin, item(9)), Err(ServiceError::EventClosed)));
    assert!(matches!(s.add_comment(&admin, "late"), Err(ServiceError::EventClosed)));
    assert!(matches!(s.close_event(&admin, None), Err(ServiceError::EventClosed)));
    let summaries = s.notifications().into_iter().filter(|n| n.kind == NoticeKind::Summary).count();
    assert_eq!(summaries, 5);
}

#[test]
fn close_errors() {
    let f = event_with(service(), &["b@x"], &[]);
    let s = &f.service;
    assert!(matches!(s.close_event(&f.members[0], None), Err(ServiceError::NotAdmin)));
    assert!(matches!(s.close_event(&f.admin, None), Err(ServiceError::NoOptions)));
    s.add_option(&f.admin, item(2)).unwrap();
    assert!(matches!(s.close_event(&f.admin, Some("o7")), Err(ServiceError::UnknownOption(_))));
    assert!(s.close_event(&f.admin, None).is_ok());
}

#[test]
fn fresh_view_has_ten_recommendations_and_empty_tallies() {
    let f = event_with(service(), &["b@x"], &[0, 1]);
    let view = f.service.get_event_view(&f.members[0]).unwrap();
    assert_eq!(view.recommendations.len(), 10);
    assert!(view.tally.options.iter().all(|t| t.positives == 0 && t.negatives == 0));
    assert!(!view.is_admin);
    assert_eq!(view.poll_interval_ms, 3000);
    assert_eq!(f.service.recommendations(&f.admin, 3).unwrap().len(), 3);
    assert_eq!(view.recommendations[..3], f.service.recommendations(&f.admin, 3).unwrap()[..]);
}

#[test]
fn votes_feed_member_histories() {
    let f = event_with(service(), &["b@x"], &[4]);
    let s = &f.service;
    s.cast_vote(&f.admin, "o1", Positive).unwrap();
    s.cast_vote(&f.admin, "o1", Negative).unwrap();
    let entry = s.history().get(&UserId::new("u1"), &item(4)).unwrap();
    assert_eq!((entry.s, entry.n), (0.5, 2));
    let view = s.get_event_view(&f.admin).unwrap();
    assert_eq!(view.member_votes[&UserId::new("u1")]["o1"], Negative);
}

#[test]
fn export_counts_and_round_trip() {
    assert!(service().export_event_log(None).is_empty());
    assert_eq!(events_to_string(&service().export_event_log(None)), "");

    let f = event_with(service(), &["b@x", "c@x"], &[0, 1]);
    let s = &f.service;
    let tokens: Vec<&String> = [&f.admin].into_iter().chain(&f.members).collect();
    for (k, t) in tokens.iter().enumerate() {
        s.cast_vote(t, "o1", Vote::from_bool(k % 2 == 0)).unwrap();
        s.cast_vote(t, "o2", Positive).unwrap();
    }
    // a re-vote does not change the exported first vote
    s.cast_vote(&f.admin, "o1", Negative).unwrap();
    let log = s.export_event_log(None);
    assert_eq!(log.len(), 2);
    assert_eq!(log.iter().map(|e| e.votes.len()).sum::<usize>(), 6);
    assert_eq!(log[0].event_id.as_str(), "e1:o1");
    assert_eq!(log[0].votes[0].value, Positive);
    for e in &log {
        e.validate().unwrap();
        assert_eq!(e.group.len(), 3);
    }
    let text = events_to_string(&log);
    assert_eq!(text.lines().count(), 2);
    assert_eq!(parse_events(&text).unwrap(), log);

    let later = s.state_image().events[0].created_ts + 1;
    assert!(s.export_event_log(Some(later)).is_empty());
}

#[test]
fn tallies_fold_after_every_mutation() {
    use rand::{Rng, SeedableRng};
    let invitees: Vec<String> = (0..5).map(|k| format!("m{k}@x")).collect();
    let refs: Vec<&str> = invitees.iter().map(String::as_str).collect();
    let f = event_with(service(), &refs, &[0, 1, 2]);
    let tokens: Vec<String> = [f.admin.clone()].into_iter().chain(f.members.clone()).collect();
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    for _ in 0..300 {
        let t = &tokens[rng.gen_range(0..tokens.len())];
        match rng.gen_range(0..10) {
            0 => {
                let _ = f.service.add_option(t, item(rng.gen_range(0..30)));
            }
            1 => {
                f.service.add_comment(t, "hm").unwrap();
            }
            _ => {
                let n = f.service.get_event_view(t).unwrap().options.len();
                let o = format!("o{}", rng.gen_range(1..=n));
                f.service.cast_vote(t, &o, Vote::from_bool(rng.gen_bool(0.5))).unwrap();
            }
        }
        assert_tallies_fold(&f.service);
    }
    let counts: BTreeMap<_, _> = f
        .service
        .get_event_view(&f.admin)
        .unwrap()
        .tally
        .options
        .into_iter()
        .map(|t| (t.option_id, t.voters.len()))
        .collect();
    assert!(counts.values().all(|&n| n <= tokens.len()));
}
