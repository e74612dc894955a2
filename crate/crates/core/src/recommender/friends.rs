use std::collections::{BTreeMap, BTreeSet};

use crate::ids::UserId;

/// Default number of suggested friends.
pub const DEFAULT_FRIEND_SUGGESTIONS: usize = 5;

/// Other users ranked by how many past events they shared with `user`;
/// ties go to the smaller id.
pub fn suggest_friends<G: AsRef<[UserId]>>(
    user: &UserId,
    past_groups: impl IntoIterator<Item = G>,
    k: usize,
) -> Vec<UserId> {
    let mut counts: BTreeMap<&UserId, usize> = BTreeMap::new();
    let groups: Vec<G> = past_groups.into_iter().collect();
    for group in &groups {
        let members: BTreeSet<&UserId> = group.as_ref().iter().collect();
        if !members.contains(user) {
            continue;
        }
        for other in members.into_iter().filter(|m| *m != user) {
            *counts.entry(other).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&UserId, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(u, _)| u.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(members: &[&str]) -> Vec<UserId> {
        members.iter().map(|m| UserId::new(*m)).collect()
    }

    #[test]
    fn no_history_no_suggestions() {
        let none: Vec<Vec<UserId>> = Vec::new();
        assert!(suggest_friends(&"me".into(), none, 5).is_empty());
    }

    #[test]
    fn ranks_by_shared_events() {
        let groups = vec![
            g(&["me", "A", "C"]),
            g(&["me", "A", "B"]),
            g(&["me", "A", "C"]),
            g(&["A", "B", "C", "D"]),
        ];
        assert_eq!(suggest_friends(&"me".into(), &groups, 5), g(&["A", "C", "B"]));
        assert_eq!(suggest_friends(&"me".into(), &groups, 1), g(&["A"]));
    }

    #[test]
    fn ties_by_id() {
        let groups = vec![g(&["me", "B", "A"]), g(&["A", "me", "B"])];
        assert_eq!(suggest_friends(&"me".into(), &groups, 5), g(&["A", "B"]));
    }
}
