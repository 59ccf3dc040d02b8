//! Encoding of an alternating linear-space machine: the goal is simulated
//! by the product of `2n` services exactly when the machine has an infinite
//! alternating computation.
//!
//! Each tape cell is watched by two services (copies 1 and 2), and every
//! move letter exists in two copies so a machine step takes both watchers
//! along. At a universal head cell both moves are open to the goal, which
//! picks the continuation. At an existential cell the shared letter `zeta`
//! forces the product to commit first: copy 1 can answer `zeta` by latching
//! the first move, copy 2 by latching the second, and the goal then follows
//! whichever commitment was made. Universal head cells absorb `zeta` into
//! `top` so the choice block stays playable there.

use crate::automata::{AutomatonBuilder, ServiceAutomaton};
use crate::labels::ActionLabel;

use super::tm::{Dir, StateMode, TmKind, TmMove, TuringMachine};
use super::{
    check_tm_names, lbl_move_copy, lbl_state, move_shapes, EncodeError, EncodingKind, InstanceMeta,
    ReductionInstance,
};

const ZETA: &str = "zeta";

/// Letters of cell `j`: arrivals `q.a.j`, then both copies of each move
/// letter.
fn cell_letters(m: &TuringMachine, j: usize, copy: Option<usize>) -> Vec<String> {
    let mut out = Vec::new();
    for q in m.states() {
        for a in m.tape() {
            out.push(lbl_state(q, a, j));
        }
    }
    for q in m.states() {
        for a in m.tape() {
            for d in [Dir::Left, Dir::Right] {
                match copy {
                    Some(c) => out.push(lbl_move_copy(q, a, j, d, c)),
                    None => {
                        out.push(lbl_move_copy(q, a, j, d, 1));
                        out.push(lbl_move_copy(q, a, j, d, 2));
                    }
                }
            }
        }
    }
    out
}

fn pair_name(q: &str, a: &str) -> String {
    format!("{q}.{a}")
}

fn triple_name(m: &TuringMachine, mv: TmMove) -> String {
    format!(
        "{}.{}.{}",
        m.states()[mv.state],
        m.tape()[mv.write],
        if mv.dir == Dir::Right { "r" } else { "l" }
    )
}

fn move_letter(m: &TuringMachine, mv: TmMove, i: usize, copy: usize) -> String {
    lbl_move_copy(&m.states()[mv.state], &m.tape()[mv.write], i, mv.dir, copy)
}

/// Builds the copy-`copy` watcher of cell `i`.
fn build_service(
    m: &TuringMachine,
    input: &[usize],
    i: usize,
    copy: usize,
    all_letters: &[ActionLabel],
) -> ServiceAutomaton {
    let name = format!("A{i}{}", if copy == 1 { "p" } else { "pp" });
    let mut b = AutomatonBuilder::new(&name);
    for a in m.tape() {
        b.state(a);
    }
    for q in m.states() {
        for a in m.tape() {
            b.state(&pair_name(q, a));
        }
    }
    for q in 0..m.states().len() {
        for a in 0..m.tape().len() {
            for dir in [Dir::Right, Dir::Left] {
                b.state(&triple_name(
                    m,
                    TmMove {
                        state: q,
                        write: a,
                        dir,
                    },
                ));
            }
        }
    }
    b.state("top");
    for &l in all_letters {
        b.label(l);
    }

    if i == 1 {
        b.initial(&pair_name(&m.states()[m.initial()], &m.tape()[input[0]]));
    } else {
        b.initial(&m.tape()[input[i - 1]]);
    }

    let own: Vec<String> = cell_letters(m, i, Some(copy));

    // Arrivals and symbol-state cheats.
    for a in m.tape() {
        for q in m.states() {
            b.trans_str(a, &lbl_state(q, a, i), &pair_name(q, a));
        }
        let arrivals: Vec<String> = m.states().iter().map(|q| lbl_state(q, a, i)).collect();
        for l in &own {
            if !arrivals.contains(l) {
                b.trans_str(a, l, "top");
            }
        }
    }

    // Head-cell behavior per machine key.
    let mut keys: Vec<(usize, usize)> = m.transitions().map(|(k, _)| k).collect();
    keys.sort_unstable();
    let mut zeta_targets: Vec<TmMove> = Vec::new();
    for (q, a) in keys {
        let src = pair_name(&m.states()[q], &m.tape()[a]);
        let moves = m.moves(q, a);
        let (m1, m2) = (moves[0], moves[1]);
        match m.mode(q) {
            StateMode::Universal => {
                let l1 = move_letter(m, m1, i, copy);
                let l2 = move_letter(m, m2, i, copy);
                b.trans_str(&src, &l1, &m.tape()[m1.write]);
                b.trans_str(&src, &l2, &m.tape()[m2.write]);
                for l in &own {
                    if *l != l1 && *l != l2 {
                        b.trans_str(&src, l, "top");
                    }
                }
                // The choice letter carries no commitment at a universal
                // cell; absorbing it keeps the goal's choice block playable
                // without opening a path back to proper states.
                b.trans_str(&src, ZETA, "top");
            }
            StateMode::Existential => {
                let latched = if copy == 1 { m1 } else { m2 };
                let direct = if copy == 1 { m2 } else { m1 };
                let direct_letter = move_letter(m, direct, i, copy);
                b.trans_str(&src, ZETA, &triple_name(m, latched));
                b.trans_str(&src, &direct_letter, &m.tape()[direct.write]);
                for l in &own {
                    if *l != direct_letter {
                        b.trans_str(&src, l, "top");
                    }
                }
                if !zeta_targets.contains(&latched) {
                    zeta_targets.push(latched);
                }
            }
        }
    }

    // Latched states follow exactly their own move letter.
    for mv in zeta_targets {
        let src = triple_name(m, mv);
        let real = move_letter(m, mv, i, copy);
        b.trans_str(&src, &real, &m.tape()[mv.write]);
        for l in &own {
            if *l != real {
                b.trans_str(&src, l, "top");
            }
        }
    }

    for &l in all_letters {
        b.trans("top", l, "top");
    }
    b.build()
        .expect("cell watchers are deterministic by construction")
}

/// Builds the goal: choice block plus two-letter macro edges, entry and
/// exit merged.
fn build_goal(m: &TuringMachine, n: usize, all_letters: &[ActionLabel]) -> ServiceAutomaton {
    let mut b = AutomatonBuilder::new("B");
    b.state("s");
    b.state("choice");
    for q in m.states() {
        for sym in m.tape() {
            for i in 1..=n {
                b.state(&format!("{q}.{sym}.{i}.r"));
                b.state(&format!("{q}.{sym}.{i}.l"));
            }
        }
    }
    for &l in all_letters {
        b.label(l);
    }
    b.initial("s");

    let macro_edge = |b: &mut AutomatonBuilder, src: &str, l1: &str, l2: &str, dst: &str| {
        let mid = format!("mid({src},{l1},{l2})");
        b.state(&mid);
        b.trans_str(src, l1, &mid);
        b.trans_str(&mid, l2, dst);
    };

    b.trans_str("s", ZETA, "choice");

    for (mode, entry) in [
        (StateMode::Universal, "s"),
        (StateMode::Existential, "choice"),
    ] {
        for i in 1..n {
            for &(q, sym) in &move_shapes(m, Dir::Right, Some(mode)) {
                let (qn, an) = (&m.states()[q], &m.tape()[sym]);
                let dst = format!("{qn}.{an}.{i}.r");
                let l1 = lbl_move_copy(qn, an, i, Dir::Right, 1);
                let l2 = lbl_move_copy(qn, an, i, Dir::Right, 2);
                macro_edge(&mut b, entry, &l1, &l2, &dst);
            }
            for &(q, sym) in &move_shapes(m, Dir::Left, Some(mode)) {
                let (qn, an) = (&m.states()[q], &m.tape()[sym]);
                let dst = format!("{qn}.{an}.{}.l", i + 1);
                let l1 = lbl_move_copy(qn, an, i + 1, Dir::Left, 1);
                let l2 = lbl_move_copy(qn, an, i + 1, Dir::Left, 2);
                macro_edge(&mut b, entry, &l1, &l2, &dst);
            }
        }
    }

    // Transfers: both watcher copies of the neighbor cell take the arrival
    // letter in turn, then the block closes back at `s`.
    for q in m.states() {
        for sym in m.tape() {
            for i in 1..n {
                let src = format!("{q}.{sym}.{i}.r");
                for c in m.tape() {
                    let l = lbl_state(q, c, i + 1);
                    macro_edge(&mut b, &src, &l, &l, "s");
                }
            }
            for j in 2..=n {
                let src = format!("{q}.{sym}.{j}.l");
                for c in m.tape() {
                    let l = lbl_state(q, c, j - 1);
                    macro_edge(&mut b, &src, &l, &l, "s");
                }
            }
        }
    }
    b.build()
        .expect("the goal is deterministic by construction")
}

/// Encodes an alternating machine and input word into `2n` services (two
/// per cell, in cell order) and a goal whose simulation verdict equals
/// [`atm_has_infinite_computation`] on the same input.
///
/// [`atm_has_infinite_computation`]: super::atm_has_infinite_computation
pub fn exptime_encode(
    m: &TuringMachine,
    input: &[usize],
) -> Result<ReductionInstance, EncodeError> {
    if m.kind() != TmKind::Alternating {
        return Err(EncodeError::WrongKind {
            expected: "alternating",
        });
    }
    let n = input.len();
    if n < 2 {
        return Err(EncodeError::InputTooShort(n));
    }
    check_tm_names(m)?;

    let mut letters: Vec<String> = (1..=n).flat_map(|j| cell_letters(m, j, None)).collect();
    letters.push(ZETA.to_string());
    let all_letters: Vec<ActionLabel> = letters
        .iter()
        .map(|l| ActionLabel::new(l).expect("minted labels are valid"))
        .collect();

    let mut services = Vec::with_capacity(2 * n);
    for i in 1..=n {
        services.push(build_service(m, input, i, 1, &all_letters));
        services.push(build_service(m, input, i, 2, &all_letters));
    }
    let goal = build_goal(m, n, &all_letters);

    Ok(ReductionInstance {
        services,
        goal,
        meta: InstanceMeta {
            name: format!("{}_exptime", m.name()),
            kind: EncodingKind::Exptime,
            tm_name: m.name().to_string(),
            input: input.iter().map(|&s| m.tape()[s].clone()).collect(),
            oracle: None,
            const_alphabet: None,
            label_table: Vec::new(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::ActionLabel;
    use crate::product::ProductView;
    use crate::reductions::{atm_has_infinite_computation, parse_tm};
    use crate::simulation::simulates;

    fn bouncing_alt(modes: &str) -> (TuringMachine, Vec<usize>) {
        // Two states ping-ponging over two cells; both choices at each key
        // keep the run alive, so the machine computes forever under any
        // alternation pattern.
        let text = format!(
            "tm ab\nkind: alt\nstates: q0 q1\ntape: a b\nmode: {modes}\ninitial: q0\n\
             trans: q0 a -> q1 a R\ntrans: q0 a -> q1 b R\n\
             trans: q0 b -> q1 a R\ntrans: q0 b -> q1 b R\n\
             trans: q1 a -> q0 a L\ntrans: q1 a -> q0 b L\n\
             trans: q1 b -> q0 a L\ntrans: q1 b -> q0 b L\ninput: a a\n"
        );
        parse_tm(&text).unwrap()
    }

    #[test]
    fn state_count_matches_the_construction() {
        let (m, input) = bouncing_alt("q0 exist q1 univ");
        let inst = exptime_encode(&m, &input).unwrap();
        assert_eq!(inst.services.len(), 2 * input.len());
        let (nq, ng) = (2usize, 2usize);
        for svc in &inst.services {
            assert_eq!(svc.state_count(), 1 + ng + 3 * nq * ng); // 15
        }
    }

    #[test]
    fn zeta_reaches_exactly_two_successors_from_existential_configs() {
        let (m, input) = bouncing_alt("q0 exist q1 univ");
        let inst = exptime_encode(&m, &input).unwrap();
        let p = ProductView::new(inst.services.clone()).unwrap();
        let zeta = ActionLabel::new("zeta").unwrap();
        let succ = p.successors(&p.initial(), zeta).unwrap();
        assert_eq!(succ.len(), 2);
        // Both successors are proper: the two watcher copies latch moves.
        for (_, g) in &succ {
            assert!(inst.is_proper(g));
        }
    }

    #[test]
    fn verdict_follows_the_alternating_game() {
        for modes in ["q0 exist q1 exist", "q0 univ q1 univ", "q0 exist q1 univ"] {
            let (m, input) = bouncing_alt(modes);
            assert!(atm_has_infinite_computation(&m, &input, 1 << 20).unwrap());
            let inst = exptime_encode(&m, &input).unwrap();
            let p = ProductView::new(inst.services.clone()).unwrap();
            assert!(
                simulates(&inst.goal, &p, 1 << 22).unwrap().simulated,
                "modes {modes}"
            );
        }

        // Universal branch into a dead state: the environment wins, and the
        // product stops simulating the goal.
        let (m, input) = parse_tm(
            "tm dead\nkind: alt\nstates: q0 q1 qd\ntape: a b\n\
             mode: q0 univ q1 univ qd univ\ninitial: q0\n\
             trans: q0 a -> q1 a R\ntrans: q0 a -> qd b R\n\
             trans: q1 a -> q0 a L\ntrans: q1 a -> q0 b L\n\
             trans: q1 b -> q0 a L\ntrans: q1 b -> q0 b L\ninput: a a\n",
        )
        .unwrap();
        assert!(!atm_has_infinite_computation(&m, &input, 1 << 20).unwrap());
        let inst = exptime_encode(&m, &input).unwrap();
        let p = ProductView::new(inst.services.clone()).unwrap();
        assert!(!simulates(&inst.goal, &p, 1 << 22).unwrap().simulated);
    }
}
