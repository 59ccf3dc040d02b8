//! Simulation checker invariants and oracle cross-checks.

use std::collections::HashSet;

use compsyn_core::automata::{AutomatonBuilder, ServiceAutomaton};
use compsyn_core::gen;
use compsyn_core::labels::ActionLabel;
use compsyn_core::product::{GlobalState, ProductView};
use compsyn_core::simulation::{
    largest_simulation, largest_simulation_fullspace, simulates, simulates_component,
    simulates_disjoint,
};

const CAP: usize = 1 << 22;

fn random_shared_instance(
    rng: &mut rand_chacha::ChaCha8Rng,
    services: usize,
) -> (Vec<ServiceAutomaton>, ServiceAutomaton) {
    let pool = gen::labels(&["a", "b", "c"]);
    let svcs: Vec<ServiceAutomaton> = (0..services)
        .map(|i| gen::random_service(rng, &format!("A{}", i + 1), 4, &pool, 0.5))
        .collect();
    let goal = gen::random_service(rng, "B", 5, &pool, 0.5);
    (svcs, goal)
}

#[test]
fn reachable_fixpoint_agrees_with_fullspace_oracle_on_random_instances() {
    let mut rng = gen::rng(20);
    let mut verdicts = [0usize; 2];
    for round in 0..20 {
        let (svcs, goal) = random_shared_instance(&mut rng, 1 + round % 3);
        let p = ProductView::new(svcs).unwrap();
        let explicit = p.explicit(100_000).unwrap();
        let oracle = largest_simulation_fullspace(&goal, &explicit);
        let verdict = simulates(&goal, &p, CAP).unwrap();
        assert_eq!(
            verdict.simulated,
            oracle.contains(&(goal.initial(), explicit.initial())),
            "round {round}"
        );
        verdicts[verdict.simulated as usize] += 1;

        // The alive relation matches the oracle on every reachable pair it
        // contains, and is simulation-closed.
        let rel = largest_simulation(&goal, &p, CAP).unwrap();
        assert!(rel.is_simulation_closed(), "round {round}");
        for (s, g) in rel.iter() {
            let q = explicit.state_id(&p.state_name(&g)).unwrap();
            assert!(oracle.contains(&(s, q)), "round {round}");
        }
    }
    assert!(
        verdicts[0] > 0 && verdicts[1] > 0,
        "both verdicts exercised: {verdicts:?}"
    );
}

/// Game-reachable pairs recomputed through the public successor interface.
fn game_reachable(goal: &ServiceAutomaton, p: &ProductView) -> HashSet<(usize, GlobalState)> {
    let mut seen: HashSet<(usize, GlobalState)> = HashSet::new();
    let mut queue = vec![(goal.initial(), p.initial())];
    seen.insert(queue[0].clone());
    while let Some((s, g)) = queue.pop() {
        for a in goal.enabled_actions(s).unwrap() {
            let s2 = goal.successor(s, a).unwrap();
            for (_, g2) in p.successors(&g, a).unwrap() {
                if seen.insert((s2, g2.clone())) {
                    queue.push((s2, g2));
                }
            }
        }
    }
    seen
}

#[test]
fn adding_any_deleted_reachable_pair_breaks_closure() {
    let mut rng = gen::rng(21);
    let mut checked = 0;
    for _ in 0..20 {
        let (svcs, goal) = random_shared_instance(&mut rng, 2);
        let p = ProductView::new(svcs).unwrap();
        let rel = largest_simulation(&goal, &p, CAP).unwrap();
        for (s, g) in game_reachable(&goal, &p) {
            if rel.contains(s, &g) {
                continue;
            }
            // One closure pass over rel + the dead pair must fail.
            let contains =
                |s2: usize, g2: &GlobalState| rel.contains(s2, g2) || (s2 == s && *g2 == g);
            let mut closed = true;
            'pairs: for (ps, pg) in rel
                .iter()
                .map(|(a, b)| (a, b.clone()))
                .chain(std::iter::once((s, g.clone())))
            {
                for a in goal.enabled_actions(ps).unwrap() {
                    let s2 = goal.successor(ps, a).unwrap();
                    let ok = p
                        .successors(&pg, a)
                        .unwrap()
                        .into_iter()
                        .any(|(_, g2)| contains(s2, &g2));
                    if !ok {
                        closed = false;
                        break 'pairs;
                    }
                }
            }
            assert!(
                !closed,
                "dead pair ({s}, {:?}) would re-close the relation",
                g
            );
            checked += 1;
            if checked >= 25 {
                return;
            }
        }
    }
    assert!(checked > 0, "no deleted reachable pairs sampled");
}

#[test]
fn reflexivity_on_random_automata() {
    let mut rng = gen::rng(22);
    let alphabet = gen::labels(&["a", "b", "c"]);
    for i in 0..15 {
        let a = gen::random_service(&mut rng, &format!("R{i}"), 5, &alphabet, 0.6);
        let p = ProductView::new(vec![a.clone()]).unwrap();
        assert!(simulates(&a, &p, CAP).unwrap().simulated);
    }
}

#[test]
fn removing_goal_transitions_never_breaks_simulation() {
    let mut rng = gen::rng(23);
    use rand::Rng;
    let mut flips = 0;
    for _ in 0..30 {
        let (svcs, goal) = random_shared_instance(&mut rng, 2);
        let p = ProductView::new(svcs).unwrap();
        if !simulates(&goal, &p, CAP).unwrap().simulated {
            continue;
        }
        flips += 1;
        // Drop a random subset of transitions and recheck.
        let edges: Vec<_> = goal.transitions().collect();
        let mut b = AutomatonBuilder::new(goal.name());
        for s in goal.state_names() {
            b.state(s);
        }
        for &l in goal.alphabet() {
            b.label(l);
        }
        b.initial(goal.state_name(goal.initial()));
        for (s, l, t) in edges {
            if rng.gen_bool(0.7) {
                b.trans(goal.state_name(s), l, goal.state_name(t));
            }
        }
        let restricted = b.build().unwrap();
        assert!(simulates(&restricted, &p, CAP).unwrap().simulated);
    }
    assert!(flips > 0, "no simulated instances sampled");
}

#[test]
fn counterexamples_replay_and_end_stuck() {
    let mut rng = gen::rng(24);
    let mut seen = 0;
    for _ in 0..40 {
        let (svcs, goal) = random_shared_instance(&mut rng, 2);
        let p = ProductView::new(svcs).unwrap();
        let v = simulates(&goal, &p, CAP).unwrap();
        let Some(cx) = v.counterexample else { continue };
        seen += 1;
        let mut s = goal.initial();
        let mut g = p.initial();
        for (l, m) in &cx.steps {
            s = goal.successor(s, *l).expect("trace legal in the goal");
            let succs = p.successors(&g, *l).unwrap();
            let (_, g2) = succs
                .into_iter()
                .find(|(i, _)| i == m)
                .expect("trace legal in the product");
            g = g2;
        }
        assert!(goal.enabled_actions(s).unwrap().contains(&cx.stuck));
        assert!(p.successors(&g, cx.stuck).unwrap().is_empty());
    }
    assert!(seen > 5, "too few counterexamples sampled: {seen}");
}

/// Builds the product where every service but `keep` is replaced by a
/// one-state automaton looping on that service's alphabet.
fn component_view(services: &[ServiceAutomaton], keep: usize) -> ProductView {
    let replaced: Vec<ServiceAutomaton> = services
        .iter()
        .enumerate()
        .map(|(j, svc)| {
            if j == keep {
                svc.clone()
            } else {
                let mut b = AutomatonBuilder::new(&format!("C{j}"));
                b.state("top");
                for &l in svc.alphabet() {
                    b.label(l);
                }
                b.initial("top");
                for &l in svc.alphabet() {
                    b.trans("top", l, "top");
                }
                b.build().unwrap()
            }
        })
        .collect();
    ProductView::new(replaced).unwrap()
}

#[test]
fn component_check_matches_general_algorithm_on_component_views() {
    let mut rng = gen::rng(25);
    for round in 0..40 {
        let services = 2 + round % 3;
        let (svcs, goal) = gen::random_disjoint_instance(&mut rng, services, 4, 2, 6, 0.55);
        let p = ProductView::new(svcs.clone()).unwrap();
        for i in 0..services {
            let fast = simulates_component(&goal, &p, i).unwrap();
            let slow = simulates(&goal, &component_view(&svcs, i), CAP)
                .unwrap()
                .simulated;
            assert_eq!(fast, slow, "round {round}, component {i}");
        }
    }
}

#[test]
fn disjoint_fast_path_agrees_with_the_general_algorithm() {
    let mut rng = gen::rng(26);
    let mut verdicts = [0usize; 2];
    for round in 0..60 {
        use rand::Rng;
        let services = rng.gen_range(1..=4);
        let (svcs, goal) = gen::random_disjoint_instance(&mut rng, services, 4, 2, 8, 0.55);
        let p = ProductView::new(svcs).unwrap();
        let fast = simulates_disjoint(&goal, &p).unwrap();
        let slow = simulates(&goal, &p, CAP).unwrap().simulated;
        assert_eq!(fast, slow, "round {round}");
        verdicts[fast as usize] += 1;
    }
    assert!(
        verdicts[0] > 0 && verdicts[1] > 0,
        "both verdicts exercised: {verdicts:?}"
    );
}

#[test]
fn single_service_disjoint_equals_simulates() {
    let mut rng = gen::rng(27);
    let alphabet = gen::labels(&["a", "b"]);
    for _ in 0..10 {
        let a = gen::random_service(&mut rng, "A1", 4, &alphabet, 0.5);
        let goal = gen::random_service(&mut rng, "B", 4, &alphabet, 0.5);
        let p = ProductView::new(vec![a]).unwrap();
        assert_eq!(
            simulates_disjoint(&goal, &p).unwrap(),
            simulates(&goal, &p, CAP).unwrap().simulated
        );
    }
}

#[test]
fn pair_cap_reports_cap_exceeded() {
    let mut rng = gen::rng(28);
    let (svcs, goal) = random_shared_instance(&mut rng, 3);
    let p = ProductView::new(svcs).unwrap();
    assert!(matches!(
        simulates(&goal, &p, 2),
        Err(compsyn_core::simulation::SimulationError::CapExceeded { cap: 2, .. })
    ));
}

#[test]
fn label_interning_is_shared_across_files() {
    // Same letter name in two files is the same letter in the product.
    let a1 = ServiceAutomaton::parse(
        "automaton A1\nstates: u\nalphabet: go\ninitial: u\ntrans: u go -> u\n",
    )
    .unwrap();
    let goal = ServiceAutomaton::parse(
        "automaton B\nstates: s\nalphabet: go\ninitial: s\ntrans: s go -> s\n",
    )
    .unwrap();
    let p = ProductView::new(vec![a1]).unwrap();
    assert!(simulates(&goal, &p, CAP).unwrap().simulated);
    assert_eq!(goal.alphabet()[0], ActionLabel::new("go").unwrap());
}
