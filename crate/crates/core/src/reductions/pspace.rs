//! Encoding of a deterministic linear-space machine: the goal is simulated
//! by the product exactly when the machine loops on the input.
//!
//! Service `i` carries tape cell `i` as its state: a symbol when the head is
//! elsewhere, a (state, symbol) pair when the head is on it, or `top`, the
//! absorbing state reached on any letter that contradicts the cell's
//! content. The goal iterates two-letter blocks: a move letter
//! `q.b.i.{l,r}` rewrites the head cell, and an arrival letter `q.c.j`
//! transfers the control state to the neighbor cell. Cheating blocks send
//! some component to `top`, after which the product simulates anything;
//! faithful play tracks the computation, which blocks exactly when the
//! machine halts.

use crate::automata::{AutomatonBuilder, ServiceAutomaton};
use crate::labels::ActionLabel;

use super::tm::{Dir, TmKind, TuringMachine};
use super::{
    check_tm_names, lbl_move, lbl_state, move_shapes, EncodeError, EncodingKind, InstanceMeta,
    ReductionInstance,
};

/// All letters of cell `j` (1-based): arrival letters `q.a.j`, then move
/// letters `q.a.j.l` / `q.a.j.r`.
fn cell_letters(m: &TuringMachine, j: usize) -> Vec<String> {
    let mut out = Vec::new();
    for q in m.states() {
        for a in m.tape() {
            out.push(lbl_state(q, a, j));
        }
    }
    for q in m.states() {
        for a in m.tape() {
            out.push(lbl_move(q, a, j, Dir::Left));
            out.push(lbl_move(q, a, j, Dir::Right));
        }
    }
    out
}

fn pair_name(q: &str, a: &str) -> String {
    format!("{q}.{a}")
}

fn move_state_name(q: &str, b: &str, i: usize, d: Dir) -> String {
    lbl_move(q, b, i, d)
}

/// Builds service `A{i}` (1-based `i`) watching tape cell `i`.
fn build_service(
    m: &TuringMachine,
    input: &[usize],
    i: usize,
    all_letters: &[ActionLabel],
    cell: &[ActionLabel],
) -> ServiceAutomaton {
    let mut b = AutomatonBuilder::new(&format!("A{i}"));
    for a in m.tape() {
        b.state(a);
    }
    for q in m.states() {
        for a in m.tape() {
            b.state(&pair_name(q, a));
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

    // Arrival: a symbol cell accepts the head in any control state.
    for a in m.tape() {
        for q in m.states() {
            b.trans_str(a, &lbl_state(q, a, i), &pair_name(q, a));
        }
    }
    // Any other own-cell letter contradicts the cell content.
    for a in m.tape() {
        let own: Vec<String> = m.states().iter().map(|q| lbl_state(q, a, i)).collect();
        for l in cell {
            if !own.iter().any(|o| o == l.as_str()) {
                b.trans(a, *l, "top");
            }
        }
    }
    // Head cell: the machine's unique move rewrites the cell; everything
    // else in the cell's letters cheats to `top`. Blocking pairs stay dead.
    let mut keys: Vec<(usize, usize)> = m.transitions().map(|(k, _)| k).collect();
    keys.sort_unstable();
    for (q, a) in keys {
        let src = pair_name(&m.states()[q], &m.tape()[a]);
        let mv = m.moves(q, a)[0];
        let real = lbl_move(&m.states()[mv.state], &m.tape()[mv.write], i, mv.dir);
        b.trans_str(&src, &real, &m.tape()[mv.write]);
        for l in cell {
            if l.as_str() != real {
                b.trans(&src, *l, "top");
            }
        }
    }
    for &l in all_letters {
        b.trans("top", l, "top");
    }
    b.build()
        .expect("cell services are deterministic by construction")
}

/// Builds the goal: the block automaton with entry and exit merged, so it
/// repeats machine steps forever.
fn build_goal(m: &TuringMachine, n: usize, all_letters: &[ActionLabel]) -> ServiceAutomaton {
    let mut b = AutomatonBuilder::new("B");
    b.state("s");
    for q in m.states() {
        for sym in m.tape() {
            for i in 1..=n {
                b.state(&move_state_name(q, sym, i, Dir::Right));
                b.state(&move_state_name(q, sym, i, Dir::Left));
            }
        }
    }
    for &l in all_letters {
        b.label(l);
    }
    b.initial("s");

    let right = move_shapes(m, Dir::Right, None);
    let left = move_shapes(m, Dir::Left, None);
    for i in 1..n {
        for &(q, sym) in &right {
            let (q, sym) = (&m.states()[q], &m.tape()[sym]);
            b.trans_str(
                "s",
                &lbl_move(q, sym, i, Dir::Right),
                &move_state_name(q, sym, i, Dir::Right),
            );
        }
        for &(q, sym) in &left {
            let (q, sym) = (&m.states()[q], &m.tape()[sym]);
            b.trans_str(
                "s",
                &lbl_move(q, sym, i + 1, Dir::Left),
                &move_state_name(q, sym, i + 1, Dir::Left),
            );
        }
    }
    // Transfer edges close the block back at `s` (entry and exit merged).
    for q in m.states() {
        for sym in m.tape() {
            for i in 1..n {
                for c in m.tape() {
                    b.trans_str(
                        &move_state_name(q, sym, i, Dir::Right),
                        &lbl_state(q, c, i + 1),
                        "s",
                    );
                }
            }
            for j in 2..=n {
                for c in m.tape() {
                    b.trans_str(
                        &move_state_name(q, sym, j, Dir::Left),
                        &lbl_state(q, c, j - 1),
                        "s",
                    );
                }
            }
        }
    }
    b.build()
        .expect("the goal is deterministic by construction")
}

/// Encodes a deterministic machine and input word into `n` services and a
/// goal whose simulation verdict equals [`tm_loops`] on the same input.
///
/// [`tm_loops`]: super::tm_loops
pub fn pspace_encode(m: &TuringMachine, input: &[usize]) -> Result<ReductionInstance, EncodeError> {
    if m.kind() != TmKind::Deterministic {
        return Err(EncodeError::WrongKind {
            expected: "deterministic",
        });
    }
    let n = input.len();
    if n < 2 {
        return Err(EncodeError::InputTooShort(n));
    }
    check_tm_names(m)?;

    let all_letters: Vec<ActionLabel> = (1..=n)
        .flat_map(|j| cell_letters(m, j))
        .map(|l| ActionLabel::new(&l).expect("minted labels are valid"))
        .collect();
    let per_cell: Vec<Vec<ActionLabel>> = (1..=n)
        .map(|j| {
            cell_letters(m, j)
                .iter()
                .map(|l| ActionLabel::new(l).expect("minted labels are valid"))
                .collect()
        })
        .collect();

    let services = (1..=n)
        .map(|i| build_service(m, input, i, &all_letters, &per_cell[i - 1]))
        .collect();
    let goal = build_goal(m, n, &all_letters);

    Ok(ReductionInstance {
        services,
        goal,
        meta: InstanceMeta {
            name: format!("{}_pspace", m.name()),
            kind: EncodingKind::Pspace,
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
    use crate::product::ProductView;
    use crate::reductions::{parse_tm, tm_loops};
    use crate::simulation::simulates;

    fn bouncer() -> (TuringMachine, Vec<usize>) {
        parse_tm(
            "tm bounce\nkind: det\nstates: q0 q1\ntape: a\ninitial: q0\n\
             trans: q0 a -> q1 a R\ntrans: q1 a -> q0 a L\ninput: a a\n",
        )
        .unwrap()
    }

    #[test]
    fn state_counts_match_the_construction() {
        let (m, input) = parse_tm(
            "tm t\nkind: det\nstates: q0 q1\ntape: a b\ninitial: q0\n\
             trans: q0 a -> q1 b R\ninput: a a a\n",
        )
        .unwrap();
        let inst = pspace_encode(&m, &input).unwrap();
        let (nq, ng, n) = (2usize, 2usize, 3usize);
        for svc in &inst.services {
            assert_eq!(svc.state_count(), ng + nq * ng + 1); // 7
        }
        // |Q_K| = 2 + 2|Q|n|Gamma|; the goal glues the two anchors into one.
        assert_eq!(inst.goal.state_count(), 1 + 2 * nq * n * ng); // 25 = 26 - 1
        assert_eq!(inst.services.len(), n);
        // Full letter set on every automaton.
        let dsize = n * 3 * nq * ng;
        assert_eq!(inst.goal.alphabet().len(), dsize);
        for svc in &inst.services {
            assert_eq!(svc.alphabet().len(), dsize);
        }
    }

    #[test]
    fn top_enables_every_letter() {
        let (m, input) = bouncer();
        let inst = pspace_encode(&m, &input).unwrap();
        let svc = &inst.services[0];
        let top = svc.state_id("top").unwrap();
        assert_eq!(
            svc.enabled_actions(top).unwrap().len(),
            svc.alphabet().len()
        );
    }

    #[test]
    fn looping_machine_is_simulated_and_halting_is_not() {
        let (m, input) = bouncer();
        assert!(tm_loops(&m, &input, 1 << 20).unwrap());
        let inst = pspace_encode(&m, &input).unwrap();
        let p = ProductView::new(inst.services.clone()).unwrap();
        assert!(simulates(&inst.goal, &p, 1 << 22).unwrap().simulated);

        // Halts: q1 has no move on `a` after one step right.
        let (m, input) = parse_tm(
            "tm halt\nkind: det\nstates: q0 q1\ntape: a b\ninitial: q0\n\
             trans: q0 a -> q1 b R\ninput: a a a\n",
        )
        .unwrap();
        assert!(!tm_loops(&m, &input, 1 << 20).unwrap());
        let inst = pspace_encode(&m, &input).unwrap();
        let p = ProductView::new(inst.services.clone()).unwrap();
        let v = simulates(&inst.goal, &p, 1 << 22).unwrap();
        assert!(!v.simulated);
        assert!(v.counterexample.is_some());
    }
}
