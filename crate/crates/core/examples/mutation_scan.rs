//! Scans mutation-detection rates over candidate instances (dev tool).

use compsyn_core::automata::{AutomatonBuilder, ServiceAutomaton};
use compsyn_core::product::ProductView;
use compsyn_core::reductions::{pspace_encode, tm_loops};
use compsyn_core::simulation::simulates;

fn reachable_edges(a: &ServiceAutomaton) -> Vec<usize> {
    let mut seen = vec![false; a.state_count()];
    seen[a.initial()] = true;
    let mut queue = vec![a.initial()];
    while let Some(s) = queue.pop() {
        for l in a.enabled_actions(s).unwrap() {
            let t = a.successor(s, l).unwrap();
            if !seen[t] {
                seen[t] = true;
                queue.push(t);
            }
        }
    }
    a.transitions()
        .enumerate()
        .filter(|(_, (src, _, _))| seen[*src])
        .map(|(k, _)| k)
        .collect()
}

fn retarget(a: &ServiceAutomaton, edge: usize, new_dst: usize) -> ServiceAutomaton {
    let mut b = AutomatonBuilder::new(a.name());
    for s in a.state_names() {
        b.state(s);
    }
    for &l in a.alphabet() {
        b.label(l);
    }
    b.initial(a.state_name(a.initial()));
    for (k, (src, l, dst)) in a.transitions().enumerate() {
        let dst = if k == edge { new_dst } else { dst };
        b.trans(a.state_name(src), l, a.state_name(dst));
    }
    b.build().unwrap()
}

fn exhaustive_rate(m: &compsyn_core::reductions::TuringMachine, input: &[usize]) -> (f64, usize) {
    let oracle = tm_loops(m, input, 1 << 20).unwrap();
    let inst = pspace_encode(m, input).unwrap();
    let p = ProductView::new(inst.services.clone()).unwrap();
    assert_eq!(
        simulates(&inst.goal, &p, 1 << 22).unwrap().simulated,
        oracle
    );

    let edges: Vec<_> = inst.goal.transitions().collect();
    let reach = reachable_edges(&inst.goal);
    let mut detected = 0;
    let mut total = 0;
    for &e in &reach {
        let (_, _, dst) = edges[e];
        for t in 0..inst.goal.state_count() {
            if t == dst {
                continue;
            }
            total += 1;
            let mutant = retarget(&inst.goal, e, t);
            if simulates(&mutant, &p, 1 << 22).unwrap().simulated != oracle {
                detected += 1;
            }
        }
    }
    (detected as f64 / total.max(1) as f64, total)
}

fn main() {
    // Crafted shapes: long-chain halters over one symbol, loopers with
    // blocking pairs, minimal halters.
    let candidates = [
        // Chain q0 R q1 L q2 R q3 halt (|Gamma|=1).
        "tm chain\nkind: det\nstates: q0 q1 q2 q3\ntape: a\ninitial: q0\n\
         trans: q0 a -> q1 a R\ntrans: q1 a -> q2 a L\ntrans: q2 a -> q3 a R\ninput: a a\n",
        // Same with n=3.
        "tm chain3\nkind: det\nstates: q0 q1 q2 q3\ntape: a\ninitial: q0\n\
         trans: q0 a -> q1 a R\ntrans: q1 a -> q2 a R\ntrans: q2 a -> q3 a L\ninput: a a a\n",
        // Looper writing b, blocking pairs (q0,b) reachable by cheats.
        "tm loopb\nkind: det\nstates: q0 q1\ntape: a b\ninitial: q0\n\
         trans: q0 a -> q1 b R\ntrans: q1 a -> q0 a L\ntrans: q0 b -> q1 b R\n\
         trans: q1 b -> q0 b L\ninput: a a\n",
        // Looper with one blocking pair (q1,b); b written on the track.
        "tm loopc\nkind: det\nstates: q0 q1\ntape: a b\ninitial: q0\n\
         trans: q0 a -> q1 b R\ntrans: q1 a -> q0 a L\ntrans: q0 b -> q1 b R\ninput: a a\n",
        // Halting after a bounce (|Gamma|=1, blocking q2).
        "tm halt2\nkind: det\nstates: q0 q1 q2\ntape: a\ninitial: q0\n\
         trans: q0 a -> q1 a R\ntrans: q1 a -> q2 a L\ninput: a a\n",
    ];
    for text in candidates {
        let (m, input) = compsyn_core::reductions::parse_tm(text).unwrap();
        let (rate, total) = exhaustive_rate(&m, &input);
        let (srate, _) = stepping_rate(&m, &input);
        println!(
            "{}: oracle={} verdict-rate={:.1}% stepping-rate={:.1}% over {total} reachable retargets",
            m.name(),
            if tm_loops(&m, &input, 1 << 20).unwrap() { "LOOP" } else { "HALT" },
            rate * 100.0,
            srate * 100.0
        );
    }
}

/// How often the exhaustive stepping verifier flags a goal retarget.
fn stepping_rate(m: &compsyn_core::reductions::TuringMachine, input: &[usize]) -> (f64, usize) {
    use compsyn_core::reductions::verify_pspace_stepping;
    let inst = pspace_encode(m, input).unwrap();
    let edges: Vec<_> = inst.goal.transitions().collect();
    let reach = reachable_edges(&inst.goal);
    let mut detected = 0;
    let mut total = 0;
    for &e in &reach {
        let (_, _, dst) = edges[e];
        for t in 0..inst.goal.state_count() {
            if t == dst {
                continue;
            }
            total += 1;
            let mut mutated = inst.clone();
            mutated.goal = retarget(&inst.goal, e, t);
            if verify_pspace_stepping(&mutated, m, 1 << 16).is_err() {
                detected += 1;
            }
        }
    }
    (detected as f64 / total.max(1) as f64, total)
}
