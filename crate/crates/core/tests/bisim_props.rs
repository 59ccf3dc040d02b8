//! Banal-sequence bisimilarity cross-checked against partition refinement.

use compsyn_core::bisimulation::{
    bisim_oracle, check_bisimilar, condition_a, condition_b, BisimViolation,
};
use compsyn_core::gen;
use compsyn_core::product::ProductView;
use compsyn_core::simulation::simulates;

#[test]
fn verdicts_agree_with_the_partition_refinement_oracle() {
    let instances = gen::bisim_instances(31, 40, 10, 10_000);
    let mut bisimilar = 0;
    for (k, (svcs, goal)) in instances.iter().enumerate() {
        let p = ProductView::new(svcs.clone()).unwrap();
        let explicit = p.explicit(10_000).unwrap();
        let expected = bisim_oracle(&goal.to_nfa(), &explicit);
        let verdict = check_bisimilar(goal, &p);
        assert_eq!(verdict.bisimilar, expected, "instance {k}");
        if expected {
            bisimilar += 1;
            // Bisimulation refines simulation.
            assert!(
                simulates(goal, &p, 1 << 22).unwrap().simulated,
                "instance {k}"
            );
        }
    }
    assert!(
        bisimilar >= 10,
        "constructed bisimilar cases must hold: {bisimilar}"
    );
}

#[test]
fn witnesses_replay_with_the_reported_discrepancy() {
    let instances = gen::bisim_instances(32, 40, 5, 10_000);
    let mut a_seen = 0;
    let mut b_seen = 0;
    for (svcs, goal) in instances {
        let p = ProductView::new(svcs).unwrap();
        let verdict = check_bisimilar(&goal, &p);
        let min = &verdict.minimized_goal;
        match verdict.violation {
            None => {}
            Some(BisimViolation::A(w)) => {
                a_seen += 1;
                // The run is banal, legal on both sides, and ends where the
                // enabled sets differ by the reported label.
                let mut s = min.initial();
                let mut g = p.initial();
                for (l, m) in &w.run {
                    s = min.successor(s, *l).expect("legal in the goal");
                    let succs = p.successors(&g, *l).unwrap();
                    let (_, g2) = succs.into_iter().find(|(i, _)| i == m).expect("legal move");
                    g = g2;
                }
                let goal_has = min.enabled_actions(s).unwrap().contains(&w.label);
                let product_has = p.enabled_actions(&g).unwrap().contains(&w.label);
                assert_eq!(goal_has, w.goal_enables);
                assert_ne!(goal_has, product_has);
            }
            Some(BisimViolation::B(w)) => {
                b_seen += 1;
                // Same moves, same product end state, different goal states.
                let run = |steps: &[(compsyn_core::ActionLabel, usize)]| {
                    let mut s = min.initial();
                    let mut g = p.initial();
                    for (l, m) in steps {
                        s = min.successor(s, *l).expect("legal in the goal");
                        let succs = p.successors(&g, *l).unwrap();
                        let (_, g2) = succs.into_iter().find(|(i, _)| i == m).expect("legal move");
                        g = g2;
                    }
                    (s, g)
                };
                let (s1, g1) = run(&w.banal_run);
                let (s2, g2) = run(&w.deferred_run);
                assert_eq!(g1, g2);
                assert_ne!(s1, s2);
                assert_eq!(min.state_name(s1), w.goal_states.0);
                assert_eq!(min.state_name(s2), w.goal_states.1);
            }
        }
    }
    assert!(a_seen > 0, "no condition-A witnesses sampled");
    assert!(
        b_seen > 0 || a_seen > 10,
        "witness mix: A={a_seen}, B={b_seen}"
    );
}

#[test]
fn minimized_explicit_products_satisfy_both_conditions() {
    let mut rng = gen::rng(33);
    for _ in 0..10 {
        let (svcs, _) = gen::random_disjoint_instance(&mut rng, 3, 3, 2, 1, 0.6);
        let p = ProductView::new(svcs).unwrap();
        let explicit = p.explicit(10_000).unwrap();
        let goal = compsyn_core::automata::ServiceAutomaton::parse(&explicit.to_saut())
            .expect("disjoint products are deterministic")
            .minimize_bisim();
        assert!(condition_a(&goal, &p).is_ok());
        assert!(condition_b(&goal, &p).is_ok());
        assert!(check_bisimilar(&goal, &p).bisimilar);
    }
}
