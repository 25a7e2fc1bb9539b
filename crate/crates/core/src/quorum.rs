//! Majority-quorum and config-ordering math.

use std::sync::OnceLock;

use crate::error::ModelError;
use crate::types::{ConfigStamp, ServerSet};

/// Every majority quorum of `members`, in increasing mask order.
pub fn majority_quorums(members: ServerSet) -> Result<Vec<ServerSet>, ModelError> {
    if members.is_empty() {
        return Err(ModelError::EmptyConfig);
    }
    Ok(quorums_of(members).to_vec())
}

/// Table lookup of the majority quorums of `members`; empty for the empty set.
pub fn quorums_of(members: ServerSet) -> &'static [ServerSet] {
    static TABLE: OnceLock<Vec<Vec<ServerSet>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=u8::MAX)
            .map(|m| {
                let members = ServerSet(m);
                members
                    .subsets()
                    .filter(|q| 2 * q.len() > members.len())
                    .collect()
            })
            .collect()
    });
    &table[members.bits() as usize]
}

pub fn is_quorum(q: ServerSet, members: ServerSet) -> bool {
    q.is_subset(members) && 2 * q.len() > members.len()
}

/// Some majority quorum of `members` lies entirely inside `holders`.
pub fn some_quorum_within(members: ServerSet, holders: ServerSet) -> bool {
    !members.is_empty() && 2 * (members.bits() & holders.bits()).count_ones() as usize > members.len()
}

/// Every majority quorum of `members` contains a server of `holders`.
/// Vacuously true for an empty member set.
pub fn every_quorum_meets(members: ServerSet, holders: ServerSet) -> bool {
    !some_quorum_within(members, members.difference(holders))
}

/// Every quorum of `a` intersects every quorum of `b`.
pub fn quorums_overlap(a: ServerSet, b: ServerSet) -> bool {
    let qb = quorums_of(b);
    quorums_of(a)
        .iter()
        .all(|qa| qb.iter().all(|q| q.intersects(*qa)))
}

pub fn is_newer_config(a: ConfigStamp, b: ConfigStamp) -> bool {
    a.term > b.term || (a.term == b.term && a.version > b.version)
}

pub fn is_newer_or_equal_config(a: ConfigStamp, b: ConfigStamp) -> bool {
    is_newer_config(a, b) || a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ServerId;

    fn set(ids: &[u8]) -> ServerSet {
        ids.iter().map(|&i| ServerId(i)).collect()
    }

    #[test]
    fn quorums_of_small_sets() {
        assert_eq!(majority_quorums(set(&[0])).unwrap(), vec![set(&[0])]);
        assert_eq!(
            majority_quorums(set(&[0, 1, 2])).unwrap(),
            vec![set(&[0, 1]), set(&[0, 2]), set(&[1, 2]), set(&[0, 1, 2])]
        );
        let four = majority_quorums(set(&[0, 1, 2, 3])).unwrap();
        assert_eq!(four.len(), 5);
        assert!(four.iter().all(|q| q.len() >= 3));
        assert_eq!(majority_quorums(ServerSet::EMPTY), Err(ModelError::EmptyConfig));
    }

    #[test]
    fn closed_forms_agree_with_enumeration() {
        for m in 0..=255u8 {
            let members = ServerSet(m);
            for h in 0..=255u8 {
                let holders = ServerSet(h);
                let within = quorums_of(members).iter().any(|q| q.is_subset(holders));
                let meets = quorums_of(members).iter().all(|q| q.intersects(holders));
                assert_eq!(some_quorum_within(members, holders), within, "{members} {holders}");
                assert_eq!(every_quorum_meets(members, holders), meets, "{members} {holders}");
            }
        }
    }

    #[test]
    fn config_ordering() {
        let s = ConfigStamp::new;
        assert!(is_newer_config(s(1, 2), s(2, 1)));
        assert!(is_newer_config(s(3, 1), s(2, 1)));
        assert!(!is_newer_config(s(2, 2), s(2, 2)));
        assert!(is_newer_or_equal_config(s(2, 2), s(2, 2)));
        assert!(is_newer_or_equal_config(s(1, 2), s(9, 1)));
        assert!(!is_newer_or_equal_config(s(1, 1), s(2, 1)));
    }

    #[test]
    fn overlap_of_single_member_changes() {
        assert!(quorums_overlap(set(&[0, 1, 2]), set(&[0, 1])));
        assert!(quorums_overlap(set(&[0, 1, 2]), set(&[0, 1, 2, 3])));
        assert!(!quorums_overlap(set(&[0, 1, 2]), set(&[0])));
        assert!(!quorums_overlap(set(&[0, 1]), set(&[2, 3])));
    }
}
