use serde::{Deserialize, Serialize};

use crate::cascade::CascadeEvent;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.8 }
    }
}

impl SplitSpec {
    pub fn new(train_fraction: f64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        Ok(Self { train_fraction })
    }

    /// `ceil(f * n)`.
    pub fn train_count(&self, n: usize) -> usize {
        let exact = self.train_fraction * n as f64;
        // 0.8 * 10 must give 8, not 9, despite representation error.
        ((exact - 1e-9).ceil().max(0.0) as usize).min(n)
    }
}

/// Earliest `ceil(f * N)` events (by creation time, then id) for training,
/// the rest for testing. Independent of input order.
pub fn chronological_split(events: &[CascadeEvent], spec: &SplitSpec) -> Result<(Vec<CascadeEvent>, Vec<CascadeEvent>)> {
    SplitSpec::new(spec.train_fraction)?;
    if events.is_empty() {
        return Err(Error::Empty("event list"));
    }
    let mut sorted: Vec<&CascadeEvent> = events.iter().collect();
    sorted.sort_by(|a, b| {
        (a.creation_time().unwrap_or(i64::MIN), &a.event_id).cmp(&(b.creation_time().unwrap_or(i64::MIN), &b.event_id))
    });
    let cut = spec.train_count(events.len());
    let train = sorted[..cut].iter().map(|e| (*e).clone()).collect();
    let test = sorted[cut..].iter().map(|e| (*e).clone()).collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{EventId, ItemId};

    fn events(n: usize) -> Vec<CascadeEvent> {
        (0..n)
            .map(|k| CascadeEvent {
                event_id: EventId::new(format!("e{k}")),
                item_id: ItemId::new("i"),
                group: vec!["u".into()],
                votes: vec![],
                created_ts: Some(1000 * k as i64),
            })
            .collect()
    }

    #[test]
    fn eighty_twenty() {
        let (train, test) = chronological_split(&events(10), &SplitSpec::default()).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let last_train = train.iter().filter_map(|e| e.created_ts).max().unwrap();
        assert!(test.iter().all(|e| e.created_ts.unwrap() >= last_train));
    }

    #[test]
    fn ceiling_rule() {
        let (train, test) = chronological_split(&events(5), &SplitSpec::new(0.5).unwrap()).unwrap();
        assert_eq!((train.len(), test.len()), (3, 2));
    }

    #[test]
    fn input_order_is_irrelevant() {
        let ordered = events(9);
        let mut shuffled = ordered.clone();
        shuffled.reverse();
        shuffled.swap(0, 4);
        assert_eq!(
            chronological_split(&ordered, &SplitSpec::default()).unwrap(),
            chronological_split(&shuffled, &SplitSpec::default()).unwrap()
        );
    }

    #[test]
    fn errors() {
        assert!(chronological_split(&[], &SplitSpec::default()).is_err());
        assert!(SplitSpec::new(1.0).is_err());
        assert!(SplitSpec::new(0.0).is_err());
    }
}
