//! Property tests over random bounded states.

use mrr_core::codec::{from_json, to_json};
use mrr_core::explorer::canonical_key;
use mrr_core::induction::random_state;
use mrr_core::invariants::{eval_invariant, type_ok};
use mrr_core::{Action, ActionKind, InvariantId, Model, ModelBounds, ReplicaSetState, ServerState};
use proptest::prelude::*;

fn bounds() -> impl Strategy<Value = ModelBounds> {
    (1usize..=4, 1u32..=3, 0u32..=3, 1u32..=3)
        .prop_map(|(n, t, l, v)| ModelBounds::new(n, t, l, v).unwrap())
}

fn bounded_state() -> impl Strategy<Value = (ModelBounds, ReplicaSetState)> {
    (bounds(), any::<u64>()).prop_map(|(b, seed)| (b, random_state(&b, seed)))
}

/// Fields an action is allowed to touch on server `i`.
fn touched(a: &Action, i: usize) -> Vec<&'static str> {
    let me = a.server().index() == i;
    let target = a.target().is_some_and(|t| t.index() == i);
    match a.kind() {
        ActionKind::ClientRequest | ActionKind::GetEntries | ActionKind::RollbackEntries if me => vec!["log"],
        ActionKind::SendConfig if target => vec!["config"],
        ActionKind::Reconfig if me => vec!["config"],
        ActionKind::UpdateTerms if target => vec!["term", "role"],
        ActionKind::BecomeLeader if a.quorum().unwrap().contains(mrr_core::ServerId(i as u8)) => {
            if me {
                vec!["term", "role", "configTerm"]
            } else {
                vec!["term", "role"]
            }
        }
        _ => vec![],
    }
}

fn same_except(pre: &ServerState, post: &ServerState, allowed: &[&str]) -> bool {
    (allowed.contains(&"log") || pre.log == post.log)
        && (allowed.contains(&"term") || pre.term == post.term)
        && (allowed.contains(&"role") || pre.role == post.role)
        && (allowed.contains(&"config")
            || (pre.config == post.config
                && pre.config_version == post.config_version
                && (allowed.contains(&"configTerm") || pre.config_term == post.config_term)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn random_states_are_type_ok((b, st) in bounded_state()) {
        prop_assert!(type_ok(&st, &b));
    }

    #[test]
    fn transitions_preserve_type_ok((b, st) in bounded_state()) {
        for (_, post) in Model::new(b).enumerate_transitions(&st).unwrap() {
            prop_assert!(type_ok(&post, &b), "{}", post);
        }
    }

    #[test]
    fn actions_only_change_their_variables((b, st) in bounded_state()) {
        for (a, post) in Model::new(b).enumerate_transitions(&st).unwrap() {
            for i in 0..b.servers {
                prop_assert!(same_except(&st.servers[i], &post.servers[i], &touched(&a, i)), "{} on n{}", a, i + 1);
            }
            if a.kind() != ActionKind::CommitEntry {
                prop_assert_eq!(&st.committed, &post.committed);
            }
        }
    }

    #[test]
    fn logs_only_shrink_by_rollback((b, st) in bounded_state()) {
        for (a, post) in Model::new(b).enumerate_transitions(&st).unwrap() {
            for (pre_s, post_s) in st.servers.iter().zip(&post.servers) {
                if a.kind() == ActionKind::RollbackEntries {
                    prop_assert!(post_s.log.len() + 1 >= pre_s.log.len());
                    prop_assert!(pre_s.log.starts_with(&post_s.log));
                } else {
                    prop_assert!(post_s.log.starts_with(&pre_s.log));
                }
            }
        }
    }

    #[test]
    fn committed_and_terms_are_monotone((b, st) in bounded_state()) {
        for (_, post) in Model::new(b).enumerate_transitions(&st).unwrap() {
            prop_assert!(st.committed.is_subset(&post.committed));
            for (x, y) in st.servers.iter().zip(&post.servers) {
                prop_assert!(y.term >= x.term);
            }
        }
    }

    #[test]
    fn apply_is_pure_and_agrees_with_enumeration((b, st) in bounded_state()) {
        let model = Model::new(b);
        let listed = model.enumerate_transitions(&st).unwrap();
        prop_assert_eq!(&listed, &model.enumerate_transitions(&st).unwrap());
        let mut sorted = listed.iter().map(|(a, _)| *a).collect::<Vec<_>>();
        sorted.sort();
        prop_assert_eq!(sorted, listed.iter().map(|(a, _)| *a).collect::<Vec<_>>());
        for (a, post) in &listed {
            prop_assert_eq!(&model.apply_bounded(&st, a).unwrap(), post);
        }
    }

    #[test]
    fn keys_are_injective((b, x) in bounded_state(), seed in any::<u64>()) {
        let y = random_state(&b, seed);
        prop_assert_eq!(canonical_key(&x) == canonical_key(&y), x == y);
    }

    #[test]
    fn state_json_round_trips((_, st) in bounded_state()) {
        let text = to_json(&st);
        let back: ReplicaSetState = from_json(&text).unwrap();
        prop_assert_eq!(to_json(&back), text);
        prop_assert_eq!(back, st);
    }

    #[test]
    fn action_json_round_trips((b, st) in bounded_state()) {
        for (a, _) in Model::new(b).enumerate_transitions(&st).unwrap() {
            let text = to_json(&a);
            let back: Action = from_json(&text).unwrap();
            prop_assert_eq!(back, a);
        }
    }

    #[test]
    fn full_invariant_implies_leader_completeness((b, st) in bounded_state()) {
        if eval_invariant(InvariantId::MrrInd, &st, &b) {
            prop_assert!(eval_invariant(InvariantId::LeaderCompleteness, &st, &b));
        }
    }

    #[test]
    fn invariants_ignore_bounds_beyond_servers((b, st) in bounded_state()) {
        let wide = ModelBounds::new(b.servers, 9, 9, 9).unwrap();
        for id in InvariantId::ALL.into_iter().filter(|&id| id != InvariantId::TypeOk && id != InvariantId::MrrInd) {
            prop_assert_eq!(eval_invariant(id, &st, &b), eval_invariant(id, &st, &wide));
        }
    }
}
