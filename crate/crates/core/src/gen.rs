//! Seeded random generators for automata, machines and desk corpora.
//!
//! Everything here is deterministic in the seed, so corpora referenced by
//! tests and benchmark runs reproduce exactly.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::automata::{AutomatonBuilder, Nfa, ServiceAutomaton};
use crate::labels::ActionLabel;
use crate::product::ProductView;
use crate::reductions::{
    atm_has_infinite_computation, atm_reachable_configs, boundary_exit, tm_run_outcome, Dir,
    RunOutcome, StateMode, TmKind, TmMove, TuringMachine,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Interns `names` as labels.
pub fn labels(names: &[&str]) -> Vec<ActionLabel> {
    names
        .iter()
        .map(|n| ActionLabel::new(n).expect("valid label"))
        .collect()
}

/// A random deterministic automaton: each (state, label) pair carries a
/// transition with probability `density`, to a uniform target.
pub fn random_service(
    rng: &mut ChaCha8Rng,
    name: &str,
    states: usize,
    alphabet: &[ActionLabel],
    density: f64,
) -> ServiceAutomaton {
    let mut b = AutomatonBuilder::new(name);
    for i in 0..states {
        b.state(&format!("s{i}"));
    }
    for &l in alphabet {
        b.label(l);
    }
    b.initial("s0");
    for i in 0..states {
        for &l in alphabet {
            if rng.gen_bool(density) {
                let j = rng.gen_range(0..states);
                b.trans(&format!("s{i}"), l, &format!("s{j}"));
            }
        }
    }
    b.build().expect("one transition per (state, label)")
}

/// A random NFA; `width` extra successors may pile on the same pair.
pub fn random_nfa(
    rng: &mut ChaCha8Rng,
    name: &str,
    states: usize,
    alphabet: &[ActionLabel],
    density: f64,
    width: usize,
) -> Nfa {
    let mut b = AutomatonBuilder::new(name);
    for i in 0..states {
        b.state(&format!("s{i}"));
    }
    for &l in alphabet {
        b.label(l);
    }
    b.initial("s0");
    for i in 0..states {
        for &l in alphabet {
            if rng.gen_bool(density) {
                for _ in 0..rng.gen_range(1..=width.max(1)) {
                    let j = rng.gen_range(0..states);
                    b.trans(&format!("s{i}"), l, &format!("s{j}"));
                }
            }
        }
    }
    b.build_nfa().expect("nonempty")
}

/// Pairwise-disjoint per-service alphabets `p{i}x{j}`.
pub fn disjoint_alphabets(services: usize, letters_each: usize) -> Vec<Vec<ActionLabel>> {
    (0..services)
        .map(|i| {
            (0..letters_each)
                .map(|j| ActionLabel::new(&format!("p{i}x{j}")).expect("valid"))
                .collect()
        })
        .collect()
}

/// Random services over pairwise-disjoint alphabets plus a random goal over
/// the union.
pub fn random_disjoint_instance(
    rng: &mut ChaCha8Rng,
    services: usize,
    max_states: usize,
    letters_each: usize,
    goal_states: usize,
    density: f64,
) -> (Vec<ServiceAutomaton>, ServiceAutomaton) {
    let alphabets = disjoint_alphabets(services, letters_each);
    let svcs: Vec<ServiceAutomaton> = alphabets
        .iter()
        .enumerate()
        .map(|(i, al)| {
            let states = rng.gen_range(1..=max_states);
            random_service(rng, &format!("A{}", i + 1), states, al, density)
        })
        .collect();
    let union: Vec<ActionLabel> = alphabets.into_iter().flatten().collect();
    let goal = random_service(rng, "B", goal_states, &union, density);
    (svcs, goal)
}

/// A uniformly random executable trace of `goal`, cut at dead ends.
pub fn random_goal_trace(
    rng: &mut ChaCha8Rng,
    goal: &ServiceAutomaton,
    max_len: usize,
) -> Vec<ActionLabel> {
    let mut trace = Vec::new();
    let mut s = goal.initial();
    for _ in 0..max_len {
        let mut enabled: Vec<ActionLabel> = goal
            .enabled_actions(s)
            .expect("in range")
            .into_iter()
            .collect();
        if enabled.is_empty() {
            break;
        }
        enabled.sort_by_key(|l| l.as_str());
        let &a = enabled.choose(rng).expect("nonempty");
        trace.push(a);
        s = goal.successor(s, a).expect("enabled");
    }
    trace
}

/// Rebuilds `a` with one transition redirected to a different target.
/// Returns the mutated automaton and the index of the mutated transition.
pub fn mutate_transition_target(
    rng: &mut ChaCha8Rng,
    a: &ServiceAutomaton,
) -> Option<(ServiceAutomaton, usize)> {
    let edges: Vec<_> = a.transitions().collect();
    if edges.is_empty() || a.state_count() < 2 {
        return None;
    }
    let victim = rng.gen_range(0..edges.len());
    let (_, _, old_dst) = edges[victim];
    let mut new_dst = rng.gen_range(0..a.state_count());
    if new_dst == old_dst {
        new_dst = (new_dst + 1) % a.state_count();
    }
    let mut b = AutomatonBuilder::new(a.name());
    for s in a.state_names() {
        b.state(s);
    }
    for &l in a.alphabet() {
        b.label(l);
    }
    b.initial(a.state_name(a.initial()));
    for (k, (src, l, dst)) in edges.into_iter().enumerate() {
        let dst = if k == victim { new_dst } else { dst };
        b.trans(a.state_name(src), l, a.state_name(dst));
    }
    Some((b.build().expect("targets changed, keys unchanged"), victim))
}

fn tm_state_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

fn tm_symbols(n: usize) -> Vec<String> {
    ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
}

/// A random deterministic linear-space machine with at least one right move.
pub fn random_det_tm(
    rng: &mut ChaCha8Rng,
    name: &str,
    states: usize,
    symbols: usize,
    density: f64,
) -> TuringMachine {
    loop {
        let mut trans = std::collections::HashMap::new();
        for q in 0..states {
            for a in 0..symbols {
                if rng.gen_bool(density) {
                    let mv = TmMove {
                        state: rng.gen_range(0..states),
                        write: rng.gen_range(0..symbols),
                        dir: if rng.gen_bool(0.5) {
                            Dir::Right
                        } else {
                            Dir::Left
                        },
                    };
                    trans.insert((q, a), vec![mv]);
                }
            }
        }
        if let Ok(m) = TuringMachine::new(
            name,
            TmKind::Deterministic,
            tm_state_names(states),
            tm_symbols(symbols),
            Vec::new(),
            0,
            trans,
        ) {
            return m;
        }
    }
}

/// A random alternating machine: two distinct same-direction moves per
/// non-blocking pair, random existential/universal modes.
pub fn random_alt_tm(
    rng: &mut ChaCha8Rng,
    name: &str,
    states: usize,
    symbols: usize,
    density: f64,
) -> TuringMachine {
    assert!(states * symbols >= 2, "need two distinct moves");
    loop {
        let mut trans = std::collections::HashMap::new();
        for q in 0..states {
            for a in 0..symbols {
                if rng.gen_bool(density) {
                    let dir = if rng.gen_bool(0.5) {
                        Dir::Right
                    } else {
                        Dir::Left
                    };
                    let first = (rng.gen_range(0..states), rng.gen_range(0..symbols));
                    let second = loop {
                        let cand = (rng.gen_range(0..states), rng.gen_range(0..symbols));
                        if cand != first {
                            break cand;
                        }
                    };
                    trans.insert(
                        (q, a),
                        vec![
                            TmMove {
                                state: first.0,
                                write: first.1,
                                dir,
                            },
                            TmMove {
                                state: second.0,
                                write: second.1,
                                dir,
                            },
                        ],
                    );
                }
            }
        }
        let modes = (0..states)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    StateMode::Existential
                } else {
                    StateMode::Universal
                }
            })
            .collect();
        if let Ok(m) = TuringMachine::new(
            name,
            TmKind::Alternating,
            tm_state_names(states),
            tm_symbols(symbols),
            modes,
            0,
            trans,
        ) {
            return m;
        }
    }
}

/// A deterministic-machine corpus with both verdicts represented.
///
/// Machines whose runs try to cross a tape end are discarded, as are
/// machines halting on the last cell without any left move: in both cases
/// the cell encoding has no letter that exposes the halt, so the instance
/// would not be a fair test of the checker. The remaining halts and all
/// loops encode faithfully.
pub fn det_tm_corpus(
    seed: u64,
    want_loop: usize,
    want_halt: usize,
) -> Vec<(TuringMachine, Vec<usize>)> {
    let mut rng = rng(seed);
    let mut loops = Vec::new();
    let mut halts = Vec::new();
    let mut serial = 0;
    while loops.len() < want_loop || halts.len() < want_halt {
        serial += 1;
        let states = rng.gen_range(1..=4);
        let symbols = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=4);
        let m = random_det_tm(&mut rng, &format!("d{serial}"), states, symbols, 0.8);
        let input: Vec<usize> = (0..n).map(|_| rng.gen_range(0..symbols)).collect();
        match tm_run_outcome(&m, &input, 1 << 20) {
            Ok(RunOutcome::Loops) if loops.len() < want_loop => loops.push((m, input)),
            Ok(RunOutcome::HaltsBlocked { head }) if halts.len() < want_halt => {
                let visible = head + 2 <= input.len() || (head >= 1 && m.has_left_move());
                if visible {
                    halts.push((m, input));
                }
            }
            _ => {}
        }
    }
    let mut out = loops;
    out.extend(halts);
    out
}

/// An alternating-machine corpus with both verdicts represented. Machines
/// with any reachable configuration trying to cross a tape end are
/// discarded; blocked configurations are always exposed by the choice
/// letter, so no further filtering is needed.
pub fn alt_tm_corpus(
    seed: u64,
    want_infinite: usize,
    want_finite: usize,
) -> Vec<(TuringMachine, Vec<usize>)> {
    let mut rng = rng(seed);
    let mut inf = Vec::new();
    let mut fin = Vec::new();
    let mut serial = 0;
    while inf.len() < want_infinite || fin.len() < want_finite {
        serial += 1;
        let states = rng.gen_range(1..=3);
        let symbols = rng.gen_range(1..=2);
        if states * symbols < 2 {
            continue;
        }
        let n = rng.gen_range(2..=3);
        let m = random_alt_tm(&mut rng, &format!("a{serial}"), states, symbols, 0.75);
        let input: Vec<usize> = (0..n).map(|_| rng.gen_range(0..symbols)).collect();
        let Ok(configs) = atm_reachable_configs(&m, &input, 1 << 20) else {
            continue;
        };
        if configs.iter().any(|c| boundary_exit(&m, c)) {
            continue;
        }
        let infinite = atm_has_infinite_computation(&m, &input, 1 << 20).expect("within cap");
        if infinite && inf.len() < want_infinite {
            inf.push((m, input));
        } else if !infinite && fin.len() < want_finite {
            fin.push((m, input));
        }
    }
    let mut out = inf;
    out.extend(fin);
    out
}

/// Instances for bisimilarity testing: at least `min_bisimilar` are the
/// minimized explicit product of their own services (bisimilar by
/// construction); the rest pair random services with a random goal over the
/// union alphabet. Every explicit product fits `product_cap`.
pub fn bisim_instances(
    seed: u64,
    total: usize,
    min_bisimilar: usize,
    product_cap: usize,
) -> Vec<(Vec<ServiceAutomaton>, ServiceAutomaton)> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        let make_bisimilar = out.len() < min_bisimilar;
        let services = rng.gen_range(1..=3);
        if make_bisimilar {
            // Disjoint alphabets keep the explicit product deterministic.
            let (svcs, _) = random_disjoint_instance(&mut rng, services, 3, 2, 1, 0.6);
            let p = ProductView::new(svcs.clone()).expect("nonempty");
            let Ok(explicit) = p.explicit(product_cap) else {
                continue;
            };
            let goal = ServiceAutomaton::parse(&explicit.to_saut())
                .expect("disjoint products are deterministic")
                .minimize_bisim();
            out.push((svcs, goal));
        } else {
            // A shared pool lets services overlap on letters.
            let pool = labels(&["m0", "m1", "m2", "m3"]);
            let svcs: Vec<ServiceAutomaton> = (0..services)
                .map(|i| {
                    let states = rng.gen_range(1..=3);
                    let take = rng.gen_range(1..=pool.len());
                    let al: Vec<ActionLabel> = pool[..take].to_vec();
                    random_service(&mut rng, &format!("A{}", i + 1), states, &al, 0.6)
                })
                .collect();
            let p = ProductView::new(svcs.clone()).expect("nonempty");
            if p.explicit(product_cap).is_err() {
                continue;
            }
            let union: Vec<ActionLabel> = p.alphabet().to_vec();
            let goal_states = rng.gen_range(1..=4);
            let goal = random_service(&mut rng, "B", goal_states, &union, 0.6);
            out.push((svcs, goal));
        }
    }
    out
}
