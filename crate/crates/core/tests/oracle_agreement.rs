//! Cross-checks against the naive reference semantics.

use mrr_core::explorer::{bfs_check, BfsOptions};
use mrr_core::induction::random_state;
use mrr_core::{Guard, InvariantId, Model, ModelBounds, Mutations};
use mrr_oracle as oracle;

fn mutation_variants() -> Vec<Mutations> {
    let mut v = vec![Mutations::none(), Mutations::without_reconfig_guards()];
    v.extend(Guard::ALL.into_iter().map(|g| Mutations::none().disable(g)));
    v
}

#[test]
fn transitions_match_oracle_on_sampled_states() {
    let bounds = [
        ModelBounds::new(2, 2, 2, 2).unwrap(),
        ModelBounds::new(2, 2, 1, 2).unwrap(),
        ModelBounds::new(2, 3, 2, 3).unwrap(),
    ];
    for b in bounds {
        for muts in mutation_variants() {
            let model = Model::with_mutations(b, muts.clone());
            for seed in 0..200u64 {
                let st = random_state(&b, seed);
                let got = model.enumerate_transitions(&st).unwrap();
                let want = oracle::transitions(&st, &b, &muts);
                assert_eq!(got, want, "bounds {b}, seed {seed}, state {st}");
            }
        }
    }
}

#[test]
fn transitions_match_oracle_at_three_servers() {
    let b = ModelBounds::new(3, 3, 2, 3).unwrap();
    let model = Model::new(b);
    for seed in 0..300u64 {
        let st = random_state(&b, seed);
        assert_eq!(
            model.enumerate_transitions(&st).unwrap(),
            oracle::transitions(&st, &b, &Mutations::none()),
            "seed {seed}"
        );
    }
}

#[test]
fn reachable_counts_match_oracle() {
    let cases = [(1, 1, 1, 1), (1, 2, 2, 2), (2, 1, 1, 1), (2, 2, 1, 2), (2, 2, 2, 2), (2, 3, 1, 3)];
    for (n, t, l, v) in cases {
        let b = ModelBounds::new(n, t, l, v).unwrap();
        for muts in [Mutations::none(), Mutations::without_reconfig_guards()] {
            let r = bfs_check(b, muts.clone(), &[], BfsOptions::default()).unwrap();
            let want = oracle::reachable(&b, &muts).len() as u64;
            assert!(r.complete);
            assert_eq!(r.states_visited, want, "bounds {b}");
        }
    }
}

#[test]
fn reachable_count_matches_oracle_at_three_servers() {
    let b = ModelBounds::new(3, 2, 1, 2).unwrap();
    let r = bfs_check(b, Mutations::none(), &[], BfsOptions::default()).unwrap();
    assert_eq!(r.states_visited, oracle::reachable(&b, &Mutations::none()).len() as u64);
}

#[test]
fn bfs_visits_exactly_the_oracle_state_set() {
    let b = ModelBounds::new(2, 2, 2, 2).unwrap();
    let r = bfs_check(b, Mutations::none(), &InvariantId::ALL, BfsOptions::default()).unwrap();
    let states = oracle::reachable(&b, &Mutations::none());
    assert_eq!(r.states_visited as usize, states.len());
    // every oracle-reachable state satisfies the checked invariants
    for st in &states {
        assert!(mrr_core::invariants::eval_invariant(InvariantId::MrrInd, st, &b), "{st}");
    }
    assert!(r.ok());
}

#[test]
fn initial_states_agree() {
    for n in 1..=8 {
        let b = ModelBounds::new(n, 1, 1, 1).unwrap();
        assert_eq!(Model::new(b).initial_state(), oracle::initial(&b));
    }
}
