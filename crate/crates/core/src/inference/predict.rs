use serde::{Deserialize, Serialize};

use crate::cascade::{positive_probability, CascadeEvent, CascadeParams};
use crate::ids::{ItemId, UserId};
use crate::scalar::Scalar;

/// One scored vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction<T> {
    pub user: UserId,
    pub item: ItemId,
    pub probability: T,
    pub label: bool,
}

/// Scores every recorded vote, conditioning on the positive voters that
/// actually preceded it in its event.
pub fn predict_events<T: Scalar>(params: &CascadeParams<T>, events: &[CascadeEvent]) -> Vec<Prediction<T>> {
    let mut out = Vec::with_capacity(events.iter().map(|e| e.votes.len()).sum());
    for e in events {
        let mut positives: Vec<&UserId> = Vec::new();
        for vote in &e.votes {
            out.push(Prediction {
                user: vote.user.clone(),
                item: e.item_id.clone(),
                probability: positive_probability(params, &vote.user, &e.item_id, positives.iter().copied()),
                label: vote.value.is_positive(),
            });
            if vote.value.is_positive() {
                positives.push(&vote.user);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{CastVote, Vote};
    use crate::ids::EventId;

    fn event() -> CascadeEvent {
        CascadeEvent {
            event_id: EventId::new("e"),
            item_id: ItemId::new("i"),
            group: vec!["v".into(), "u".into()],
            votes: vec![
                CastVote { user: "v".into(), value: Vote::Positive, ts: 1 },
                CastVote { user: "u".into(), value: Vote::Negative, ts: 2 },
            ],
            created_ts: None,
        }
    }

    #[test]
    fn uninformative_params_predict_half() {
        let preds = predict_events(&CascadeParams::<f64>::new(), &[event()]);
        assert!(preds.iter().all(|p| p.probability == 0.5));
        assert_eq!(preds.iter().map(|p| p.label).collect::<Vec<_>>(), [true, false]);
    }

    #[test]
    fn teacher_forced_predecessors() {
        let mut params = CascadeParams::<f64>::new();
        params.set_preference("v".into(), "i".into(), 0.9).unwrap();
        params.set_preference("u".into(), "i".into(), 0.2).unwrap();
        params.set_influence("v".into(), "u".into(), 0.5).unwrap();
        let preds = predict_events(&params, &[event()]);
        assert_eq!(preds[0].probability, 0.9);
        assert!((preds[1].probability - 0.6).abs() < 1e-12);
    }
}
