//! Exhaustive small-scope checks of the invariant and the induction engine.

use std::collections::BTreeSet;

use mrr_core::induction::{
    candidate_states, check_consecution_exhaustive, check_consecution_sampled, check_initiation,
    ExhaustiveOptions, Query, SampleOptions,
};
use mrr_core::invariants::{eval_invariant, holds_all};
use mrr_core::{ActionKind, ConjunctSet, InvariantId, Model, ModelBounds, Mutations};
use mrr_oracle as oracle;

#[test]
fn full_invariant_implies_state_machine_safety() {
    let b = ModelBounds::new(2, 2, 2, 2).unwrap();
    let states = candidate_states(b, ConjunctSet::ALL, u128::MAX).unwrap();
    assert!(states.len() > 100_000, "only {} states", states.len());
    for st in &states {
        assert!(eval_invariant(InvariantId::StateMachineSafety, st, &b), "{st}");
        assert!(eval_invariant(InvariantId::MrrInd, st, &b));
    }
}

#[test]
fn pruned_enumeration_matches_brute_force() {
    let b = ModelBounds::new(2, 1, 1, 1).unwrap();
    let all = oracle::all_type_ok_states(&b);
    for candidate in [
        ConjunctSet::ALL,
        ConjunctSet::ALL.without(InvariantId::LeaderCompleteness),
        ConjunctSet::only(InvariantId::TypeOk).with(InvariantId::CommittedTermMatchesEntry),
    ] {
        let want: BTreeSet<String> = all
            .iter()
            .filter(|st| holds_all(candidate, st, &b))
            .map(|st| st.to_string())
            .collect();
        let got: BTreeSet<String> = candidate_states(b, candidate, u128::MAX)
            .unwrap()
            .iter()
            .map(|st| st.to_string())
            .collect();
        assert_eq!(got, want);
    }
}

#[test]
fn dropping_a_conjunct_never_shrinks_the_satisfying_set() {
    let b = ModelBounds::new(2, 1, 1, 1).unwrap();
    let all = oracle::all_type_ok_states(&b);
    let full = all.iter().filter(|st| holds_all(ConjunctSet::ALL, st, &b)).count();
    assert!(full > 0);
    for c in InvariantId::CONJUNCTS {
        let weaker = ConjunctSet::ALL.without(c);
        let mut count = 0;
        for st in &all {
            let strong = holds_all(ConjunctSet::ALL, st, &b);
            let weak = holds_all(weaker, st, &b);
            assert!(!strong || weak);
            count += weak as usize;
        }
        assert!(count >= full, "{c}");
    }
}

#[test]
fn initiation_passes_for_one_to_five_servers() {
    for n in 1..=5 {
        for (t, l, v) in [(1, 1, 1), (3, 2, 3)] {
            assert!(check_initiation(ModelBounds::new(n, t, l, v).unwrap()).unwrap().ok);
        }
    }
}

fn goals(r: &mrr_core::ConsecutionReport) -> BTreeSet<(ActionKind, InvariantId)> {
    r.matrix.cti_goals().into_iter().collect()
}

#[test]
fn sampled_ctis_are_a_subset_of_exhaustive_ones() {
    let b = ModelBounds::new(2, 2, 1, 2).unwrap();
    for dropped in [
        InvariantId::ElectionSafety,
        InvariantId::ActiveConfigsSafeAtTerms,
        InvariantId::LeaderCompleteness,
        InvariantId::PrimaryConfigTermEqualToCurrentTerm,
    ] {
        let q = Query {
            candidate: ConjunctSet::ALL.without(dropped),
            goals: ConjunctSet::ALL.without(dropped),
            actions: ActionKind::ALL.to_vec(),
        };
        let ex = check_consecution_exhaustive(b, Mutations::none(), &q, ExhaustiveOptions::default()).unwrap();
        let sa = check_consecution_sampled(
            b,
            Mutations::none(),
            &q,
            SampleOptions { samples: 50_000, seed: 5, ..Default::default() },
        )
        .unwrap();
        assert!(goals(&sa).is_subset(&goals(&ex)), "dropping {dropped}");
        assert!(!goals(&ex).is_empty(), "dropping {dropped} should not stay inductive");
    }
}

#[test]
fn cti_records_revalidate() {
    let b = ModelBounds::new(2, 2, 1, 2).unwrap();
    let model = Model::new(b);
    let q = Query {
        candidate: ConjunctSet::only(InvariantId::TypeOk),
        goals: ConjunctSet::ALL,
        actions: ActionKind::ALL.to_vec(),
    };
    let r = check_consecution_sampled(
        b,
        Mutations::none(),
        &q,
        SampleOptions { samples: 5_000, seed: 9, max_ctis: 500, ..Default::default() },
    )
    .unwrap();
    assert!(r.ctis.len() >= 100);
    for cti in &r.ctis {
        cti.revalidate(&model, q.candidate).unwrap();
    }
}

#[test]
fn exhaustive_full_matrix_at_small_scope() {
    let b = ModelBounds::new(2, 2, 1, 2).unwrap();
    let r = check_consecution_exhaustive(b, Mutations::none(), &Query::full(), ExhaustiveOptions::default())
        .unwrap();
    assert_eq!(r.cti_count, 0);
    assert_eq!(r.matrix.count(mrr_core::induction::CellStatus::Pass), 160);
    assert!(r.accepted > 0);
    assert_eq!(r.examined, mrr_core::induction::state_space_size(&b) as u64);
}

#[test]
fn config_goal_never_breaks_under_update_terms() {
    let b = ModelBounds::new(3, 3, 2, 3).unwrap();
    let q = Query {
        candidate: ConjunctSet::ALL,
        goals: ConjunctSet::only(InvariantId::ConfigsNonEmpty),
        actions: vec![ActionKind::UpdateTerms],
    };
    let r = check_consecution_sampled(b, Mutations::none(), &q, SampleOptions { samples: 5_000, ..Default::default() })
        .unwrap();
    let cell = r.matrix.cell(ActionKind::UpdateTerms, InvariantId::ConfigsNonEmpty);
    assert!(cell.checked > 0);
    assert_eq!(cell.ctis, 0);
    assert_eq!(r.matrix.count(mrr_core::induction::CellStatus::NotExercised), 159);
}

#[test]
fn empty_action_set_exercises_nothing() {
    let b = ModelBounds::new(2, 2, 1, 2).unwrap();
    let q = Query { actions: vec![], ..Query::full() };
    let r = check_consecution_exhaustive(b, Mutations::none(), &q, ExhaustiveOptions::default()).unwrap();
    assert_eq!(r.matrix.count(mrr_core::induction::CellStatus::NotExercised), 160);
    assert_eq!(r.transitions_checked, 0);
}

#[test]
fn sampling_is_thread_count_independent() {
    let b = ModelBounds::new(3, 3, 2, 3).unwrap();
    let q = Query {
        candidate: ConjunctSet::ALL.without(InvariantId::ElectionSafety),
        goals: ConjunctSet::ALL.without(InvariantId::ElectionSafety),
        actions: ActionKind::ALL.to_vec(),
    };
    let run = |threads| {
        let mut r = check_consecution_sampled(
            b,
            Mutations::none(),
            &q,
            SampleOptions { samples: 40_000, accepted_target: Some(9_000), seed: 3, threads, ..Default::default() },
        )
        .unwrap();
        r.wall_time_ms = 0;
        r
    };
    let one = run(1);
    assert_eq!(one.accepted, 9_000);
    assert!(one.cti_count > 0);
    assert_eq!(one, run(3));
}
