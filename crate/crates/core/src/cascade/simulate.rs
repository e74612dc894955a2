use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{negative_probability, CascadeEvent, CascadeParams, CastVote, Vote};
use crate::error::{Error, Result};
use crate::ids::{EventId, ItemId, UserId};
use crate::scalar::Scalar;

/// Spacing between consecutive synthetic events.
const EVENT_SPACING_MS: i64 = 3_600_000;
/// Upper bound on the gap between two votes of one synthetic event.
const MAX_VOTE_GAP_MS: i64 = 60_000;

/// Draws the votes of one event, members voting in the given order.
pub fn simulate_event<T: Scalar>(
    params: &CascadeParams<T>,
    event_id: EventId,
    group: &[UserId],
    item: &ItemId,
    seed: u64,
) -> CascadeEvent {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_event_with_rng(params, event_id, group, item, 0, &mut rng)
}

/// Same as [`simulate_event`] with a caller-supplied generator; votes are
/// stamped after `start_ts`.
pub fn simulate_event_with_rng<T: Scalar, R: Rng + ?Sized>(
    params: &CascadeParams<T>,
    event_id: EventId,
    group: &[UserId],
    item: &ItemId,
    start_ts: i64,
    rng: &mut R,
) -> CascadeEvent {
    let mut votes = Vec::with_capacity(group.len());
    let mut positives: Vec<&UserId> = Vec::new();
    let mut ts = start_ts;
    for user in group {
        let p_neg = negative_probability(params, user, item, positives.iter().copied());
        let positive = rng.gen::<f64>() >= p_neg.to_f64_lossy();
        ts += rng.gen_range(1..=MAX_VOTE_GAP_MS);
        votes.push(CastVote {
            user: user.clone(),
            value: Vote::from_bool(positive),
            ts,
        });
        if positive {
            positives.push(user);
        }
    }
    CascadeEvent {
        event_id,
        item_id: item.clone(),
        group: group.to_vec(),
        votes,
        created_ts: Some(start_ts),
    }
}

/// Generates `n_events` events with uniformly drawn groups, items and
/// member orderings. Group sizes are drawn uniformly from `group_sizes`.
pub fn simulate_dataset<T: Scalar>(
    params: &CascadeParams<T>,
    population: &[UserId],
    catalog: &[ItemId],
    n_events: usize,
    group_sizes: &[usize],
    seed: u64,
) -> Result<Vec<CascadeEvent>> {
    if n_events == 0 {
        return Ok(Vec::new());
    }
    if group_sizes.is_empty() {
        return Err(Error::Empty("group sizes"));
    }
    if catalog.is_empty() {
        return Err(Error::Empty("catalog"));
    }
    if let Some(&size) = group_sizes.iter().find(|&&s| s == 0 || s > population.len()) {
        if size == 0 {
            return Err(Error::InvalidConfig("group size must be at least 1".into()));
        }
        return Err(Error::GroupTooLarge {
            size,
            population: population.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n_events.to_string().len().max(4);
    let mut events = Vec::with_capacity(n_events);
    for k in 0..n_events {
        let size = group_sizes[rng.gen_range(0..group_sizes.len())];
        let mut group: Vec<UserId> = population.choose_multiple(&mut rng, size).cloned().collect();
        group.shuffle(&mut rng);
        let item = &catalog[rng.gen_range(0..catalog.len())];
        let id = EventId::new(format!("e{k:0width$}"));
        events.push(simulate_event_with_rng(
            params,
            id,
            &group,
            item,
            k as i64 * EVENT_SPACING_MS,
            &mut rng,
        ));
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn users(n: usize) -> Vec<UserId> {
        (0..n).map(|k| UserId::new(format!("u{k}"))).collect()
    }

    fn uniform_params(pref: f64, infl: f64, population: &[UserId], item: &ItemId) -> CascadeParams<f64> {
        let mut params = CascadeParams::new();
        for u in population {
            params.set_preference(u.clone(), item.clone(), pref).unwrap();
            for v in population {
                if u != v {
                    params.set_influence(v.clone(), u.clone(), infl).unwrap();
                }
            }
        }
        params
    }

    #[test]
    fn certain_preferences_give_certain_votes() {
        let group = users(5);
        let item = ItemId::new("i");
        let yes = simulate_event(&uniform_params(1.0, 0.0, &group, &item), "e".into(), &group, &item, 3);
        assert!(yes.votes.iter().all(|v| v.value.is_positive()));
        let no = simulate_event(&uniform_params(0.0, 0.0, &group, &item), "e".into(), &group, &item, 3);
        assert!(no.votes.iter().all(|v| !v.value.is_positive()));
        assert!(yes.validate().is_ok());
    }

    #[test]
    fn first_voter_rate_matches_preference() {
        let group = users(1);
        let item = ItemId::new("i");
        let params = uniform_params(0.5, 0.0, &group, &item);
        let n = 10_000;
        let positives = (0..n)
            .filter(|&s| simulate_event(&params, "e".into(), &group, &item, s).votes[0].value.is_positive())
            .count();
        let rate = positives as f64 / n as f64;
        assert!((0.485..=0.515).contains(&rate), "rate {rate}");
    }

    #[test]
    fn dataset_edge_cases() {
        let pop = users(3);
        let items = vec![ItemId::new("i")];
        let params = CascadeParams::<f64>::new();
        assert!(simulate_dataset(&params, &pop, &items, 0, &[2], 1).unwrap().is_empty());
        assert!(matches!(
            simulate_dataset(&params, &pop, &items, 5, &[4], 1),
            Err(Error::GroupTooLarge { size: 4, population: 3 })
        ));
        assert!(simulate_dataset(&params, &pop, &items, 5, &[], 1).is_err());
    }

    #[test]
    fn dataset_is_reproducible_and_ordered() {
        let pop = users(19);
        let items: Vec<ItemId> = (0..79).map(|k| ItemId::new(format!("i{k}"))).collect();
        let params = CascadeParams::<f64>::new();
        let a = simulate_dataset(&params, &pop, &items, 277, &[2, 4, 8], 42).unwrap();
        let b = simulate_dataset(&params, &pop, &items, 277, &[2, 4, 8], 42).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        assert_eq!(a.len(), 277);
        for pair in a.windows(2) {
            assert!(pair[0].votes.last().unwrap().ts < pair[1].created_ts.unwrap());
        }
        for e in &a {
            e.validate().unwrap();
            assert!([2, 4, 8].contains(&e.group.len()));
        }
    }
}
