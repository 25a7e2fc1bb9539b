//! Breadth-first search, random walks and trace replay.

use mrr_core::codec::{from_json, to_json};
use mrr_core::explorer::{bfs_check, random_walk, replay, BfsOptions, Trace, WalkOutcome};
use mrr_core::invariants::eval_invariant;
use mrr_core::{InvariantId, ModelBounds, Mutations};

const OVERLAP_BUGS: [InvariantId; 3] = [
    InvariantId::ActiveConfigsOverlap,
    InvariantId::ActiveConfigsOverlapWithCommittedEntry,
    InvariantId::StateMachineSafety,
];

fn b3() -> ModelBounds {
    ModelBounds::new(3, 2, 1, 2).unwrap()
}

#[test]
fn safety_holds_at_three_servers() {
    let r = bfs_check(
        b3(),
        Mutations::none(),
        &[InvariantId::StateMachineSafety, InvariantId::LeaderCompleteness],
        BfsOptions::default(),
    )
    .unwrap();
    assert!(r.ok() && r.complete);
    assert!(r.states_visited > 10_000);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    for muts in [Mutations::none(), Mutations::without_reconfig_guards()] {
        let run = |threads| {
            let mut r = bfs_check(
                b3(),
                muts.clone(),
                &InvariantId::ALL,
                BfsOptions { threads, ..BfsOptions::default() },
            )
            .unwrap();
            r.wall_time_ms = 0;
            to_json(&r)
        };
        assert_eq!(run(1), run(4));
    }
}

#[test]
fn disabled_reconfig_guards_break_overlap() {
    let r = bfs_check(b3(), Mutations::without_reconfig_guards(), &InvariantId::ALL, BfsOptions::default())
        .unwrap();
    assert!(!r.ok());
    let first = r.violations.iter().min_by_key(|v| v.depth).unwrap();
    // the shallowest violation is an overlap failure, and real safety breaks later
    assert!(r
        .violations
        .iter()
        .any(|v| v.depth == first.depth && OVERLAP_BUGS.contains(&v.invariant)));
    assert!(r.violations.iter().any(|v| v.invariant == InvariantId::StateMachineSafety));
    assert!(first.depth > 0);
    for v in &r.violations {
        assert_eq!(v.trace.len(), v.depth);
        let rep = replay(&v.trace, &[v.invariant]).unwrap();
        // only the last state violates: shortest traces end at the first bad state
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].step, v.depth);
        assert!(!eval_invariant(v.invariant, v.trace.last_state(), &b3()));
    }
}

#[test]
fn stop_at_first_ends_at_the_first_violating_level() {
    let muts = Mutations::without_reconfig_guards();
    let full = bfs_check(b3(), muts.clone(), &InvariantId::ALL, BfsOptions::default()).unwrap();
    let early = bfs_check(
        b3(),
        muts,
        &InvariantId::ALL,
        BfsOptions { stop_at_first: true, ..BfsOptions::default() },
    )
    .unwrap();
    let min_depth = full.violations.iter().map(|v| v.depth).min().unwrap();
    assert!(early.stopped_at_first);
    assert!(early.violations.iter().all(|v| v.depth == min_depth));
    assert_eq!(early.diameter, min_depth);
    assert!(early.states_visited < full.states_visited);
}

#[test]
fn state_budget_marks_report_incomplete() {
    let r = bfs_check(
        b3(),
        Mutations::none(),
        &InvariantId::ALL,
        BfsOptions { max_states: 1_000, ..BfsOptions::default() },
    )
    .unwrap();
    assert!(!r.complete);
    assert_eq!(r.states_visited, 1_000);
}

#[test]
fn walks_are_seed_deterministic() {
    let b = ModelBounds::new(3, 3, 2, 3).unwrap();
    let a = random_walk(b, Mutations::none(), 200, 42, &InvariantId::ALL).unwrap();
    let c = random_walk(b, Mutations::none(), 200, 42, &InvariantId::ALL).unwrap();
    assert_eq!(to_json(&a.trace), to_json(&c.trace));
    assert!(a.violated.is_empty());
    replay(&a.trace, &InvariantId::ALL).unwrap();
    let other = random_walk(b, Mutations::none(), 200, 43, &InvariantId::ALL).unwrap();
    assert_ne!(a.trace, other.trace);
}

#[test]
fn mutated_walks_eventually_violate() {
    let b = ModelBounds::new(3, 3, 2, 3).unwrap();
    let hit = (0..500u64).find_map(|seed| {
        let r = random_walk(b, Mutations::without_reconfig_guards(), 60, seed, &OVERLAP_BUGS).unwrap();
        (r.outcome == WalkOutcome::Violation).then_some(r)
    });
    let r = hit.expect("no violating walk in 500 seeds");
    let rep = replay(&r.trace, &OVERLAP_BUGS).unwrap();
    assert_eq!(rep.violations.last().unwrap().step, r.trace.len());
}

#[test]
fn traces_survive_json() {
    let b = ModelBounds::new(3, 3, 2, 3).unwrap();
    let r = random_walk(b, Mutations::none().disable(mrr_core::Guard::RollbackDivergence), 50, 7, &[]).unwrap();
    let text = to_json(&r.trace);
    let back: Trace = from_json(&text).unwrap();
    assert_eq!(back, r.trace);
    assert_eq!(to_json(&back), text);
    replay(&back, &InvariantId::ALL).unwrap();
}
