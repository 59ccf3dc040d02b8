//! Step-level verification of encoded instances.
//!
//! For every machine configuration, the corresponding global state of the
//! encoded product must relate to the goal's block words exactly as the
//! machine steps dictate:
//!
//! - a deterministic step leaves exactly one block word ending proper, and
//!   it lands on the successor configuration's global state;
//! - an alternating step leaves exactly two (the two moves), and at an
//!   existential head cell the choice letter has exactly two product
//!   answers;
//! - a blocked configuration leaves some block word the product cannot
//!   execute at all (deterministic case, when a head-cell letter exists for
//!   the halt position) or makes the choice letter unanswerable
//!   (alternating case);
//! - a configuration whose move would cross the tape end leaves no proper
//!   word: the construction simply has no block for it.
//!
//! These checks are exhaustive over all configurations of the input length,
//! not just reachable ones.

use std::collections::HashSet;

use thiserror::Error;

use crate::automata::ServiceAutomaton;
use crate::labels::ActionLabel;
use crate::product::{GlobalState, ProductView};

use super::tm::{tm_successors, StateMode, TmConfiguration, TmError, TmKind, TuringMachine};
use super::{EncodingKind, ReductionInstance};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SteppingError {
    #[error("configuration {config}: {claim}")]
    Violation { config: String, claim: String },
    #[error(transparent)]
    Tm(#[from] TmError),
    #[error("instance kind {got:?} does not match the requested check")]
    WrongKind { got: EncodingKind },
}

/// Counts from a successful verification pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SteppingReport {
    pub configurations: usize,
    pub words: usize,
}

fn describe(m: &TuringMachine, c: &TmConfiguration) -> String {
    let cells: Vec<String> = c
        .tape
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if i == c.head {
                format!("[{}.{}]", m.states()[c.state], m.tape()[s])
            } else {
                m.tape()[s].clone()
            }
        })
        .collect();
    cells.join(" ")
}

/// All configurations of tape length `n`, bounded by `cap`.
fn all_configurations(
    m: &TuringMachine,
    n: usize,
    cap: usize,
) -> Result<Vec<TmConfiguration>, TmError> {
    let size = m.configuration_space(n).ok_or(TmError::CapExceeded {
        size: usize::MAX,
        cap,
    })?;
    if size > cap {
        return Err(TmError::CapExceeded { size, cap });
    }
    let symbols = m.tape().len();
    let mut tapes: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..n {
        tapes = tapes
            .into_iter()
            .flat_map(|t| {
                (0..symbols).map(move |s| {
                    let mut t2 = t.clone();
                    t2.push(s);
                    t2
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(size);
    for tape in tapes {
        for head in 0..n {
            for state in 0..m.states().len() {
                out.push(TmConfiguration {
                    tape: tape.clone(),
                    head,
                    state,
                });
            }
        }
    }
    Ok(out)
}

/// The global state corresponding to a configuration: `copies` watchers per
/// cell, each at the cell's symbol, or at the head pair for the head cell.
fn corresponding_state(
    inst: &ReductionInstance,
    m: &TuringMachine,
    c: &TmConfiguration,
    copies: usize,
) -> GlobalState {
    let mut components = Vec::with_capacity(inst.services.len());
    for (cell, &sym) in c.tape.iter().enumerate() {
        let name = if cell == c.head {
            format!("{}.{}", m.states()[c.state], m.tape()[sym])
        } else {
            m.tape()[sym].clone()
        };
        for copy in 0..copies {
            let svc = &inst.services[cell * copies + copy];
            components.push(svc.state_id(&name).expect("correspondence states exist"));
        }
    }
    GlobalState(components.into_boxed_slice())
}

/// Words of the goal that leave the initial state and first return to it:
/// the blocks the goal repeats forever.
fn block_words(goal: &ServiceAutomaton, max_len: usize) -> Vec<Vec<ActionLabel>> {
    let mut out = Vec::new();
    let init = goal.initial();
    let mut stack: Vec<(usize, Vec<ActionLabel>)> = vec![(init, Vec::new())];
    while let Some((s, word)) = stack.pop() {
        if word.len() >= max_len {
            continue;
        }
        let mut moves: Vec<ActionLabel> = goal
            .enabled_actions(s)
            .expect("in range")
            .into_iter()
            .collect();
        moves.sort_by_key(|l| l.as_str());
        for a in moves {
            let t = goal.successor(s, a).expect("enabled");
            let mut w = word.clone();
            w.push(a);
            if t == init {
                out.push(w);
            } else {
                stack.push((t, w));
            }
        }
    }
    out.sort();
    out
}

/// Runs `word` from `g` along every branch; returns the complete-run end
/// states (empty when the product cannot execute the word).
fn word_ends(product: &ProductView, g: &GlobalState, word: &[ActionLabel]) -> HashSet<GlobalState> {
    let mut frontier: HashSet<GlobalState> = HashSet::new();
    frontier.insert(g.clone());
    for &a in word {
        let mut next = HashSet::new();
        for state in &frontier {
            for (_, succ) in product.successors_unchecked(state, a) {
                next.insert(succ);
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    frontier
}

struct WordAnalysis {
    executable: Vec<bool>,
    /// Per word, the set of proper end states.
    proper_ends: Vec<HashSet<GlobalState>>,
}

fn analyze_words(
    inst: &ReductionInstance,
    product: &ProductView,
    g: &GlobalState,
    words: &[Vec<ActionLabel>],
) -> WordAnalysis {
    let mut executable = Vec::with_capacity(words.len());
    let mut proper_ends = Vec::with_capacity(words.len());
    for w in words {
        let ends = word_ends(product, g, w);
        executable.push(!ends.is_empty());
        proper_ends.push(ends.into_iter().filter(|e| inst.is_proper(e)).collect());
    }
    WordAnalysis {
        executable,
        proper_ends,
    }
}

fn violation(m: &TuringMachine, c: &TmConfiguration, claim: String) -> SteppingError {
    SteppingError::Violation {
        config: describe(m, c),
        claim,
    }
}

/// Exhaustively verifies the deterministic encoding against the machine.
pub fn verify_pspace_stepping(
    inst: &ReductionInstance,
    m: &TuringMachine,
    cap: usize,
) -> Result<SteppingReport, SteppingError> {
    if inst.meta.kind != EncodingKind::Pspace {
        return Err(SteppingError::WrongKind {
            got: inst.meta.kind,
        });
    }
    assert_eq!(m.kind(), TmKind::Deterministic);
    let n = inst.services.len();
    let product = inst.product();
    let words = block_words(&inst.goal, 2);
    let configs = all_configurations(m, n, cap)?;

    for c in &configs {
        let g = corresponding_state(inst, m, c, 1);
        let analysis = analyze_words(inst, &product, &g, &words);
        let successors = tm_successors(m, c);
        let proper_words: Vec<usize> = (0..words.len())
            .filter(|&i| !analysis.proper_ends[i].is_empty())
            .collect();

        if let Some(next) = successors.first() {
            let expected = corresponding_state(inst, m, next, 1);
            if proper_words.len() != 1 {
                return Err(violation(
                    m,
                    c,
                    format!(
                        "expected exactly one proper block word, found {}",
                        proper_words.len()
                    ),
                ));
            }
            let ends = &analysis.proper_ends[proper_words[0]];
            if ends.len() != 1 || !ends.contains(&expected) {
                return Err(violation(
                    m,
                    c,
                    "the proper word does not land on the successor configuration".into(),
                ));
            }
            if !analysis.executable.iter().all(|&e| e) {
                return Err(violation(
                    m,
                    c,
                    "a block word is not executable from a live configuration".into(),
                ));
            }
        } else {
            let boundary = super::tm::boundary_exit(m, c);
            if !proper_words.is_empty() {
                return Err(violation(
                    m,
                    c,
                    "a halted configuration still reaches a proper state".into(),
                ));
            }
            if !boundary {
                let visible = c.head + 2 <= n || (c.head >= 1 && m.has_left_move());
                if visible && analysis.executable.iter().all(|&e| e) {
                    return Err(violation(
                        m,
                        c,
                        "a visibly blocked configuration leaves every block word executable".into(),
                    ));
                }
            }
        }
    }
    Ok(SteppingReport {
        configurations: configs.len(),
        words: words.len(),
    })
}

/// Exhaustively verifies the alternating encoding against the machine.
pub fn verify_exptime_stepping(
    inst: &ReductionInstance,
    m: &TuringMachine,
    cap: usize,
) -> Result<SteppingReport, SteppingError> {
    if inst.meta.kind != EncodingKind::Exptime {
        return Err(SteppingError::WrongKind {
            got: inst.meta.kind,
        });
    }
    assert_eq!(m.kind(), TmKind::Alternating);
    let n = inst.services.len() / 2;
    let product = inst.product();
    let words = block_words(&inst.goal, 5);
    let zeta = ActionLabel::new("zeta").expect("valid");
    let configs = all_configurations(m, n, cap)?;

    for c in &configs {
        let g = corresponding_state(inst, m, c, 2);
        let successors = tm_successors(m, c);
        let analysis = analyze_words(inst, &product, &g, &words);
        let proper_words: Vec<usize> = (0..words.len())
            .filter(|&i| !analysis.proper_ends[i].is_empty())
            .collect();

        if successors.len() == 2 {
            let expected: HashSet<GlobalState> = successors
                .iter()
                .map(|s| corresponding_state(inst, m, s, 2))
                .collect();
            if proper_words.len() != 2 {
                return Err(violation(
                    m,
                    c,
                    format!(
                        "expected exactly two proper block words, found {}",
                        proper_words.len()
                    ),
                ));
            }
            let mut reached: HashSet<GlobalState> = HashSet::new();
            for &i in &proper_words {
                if analysis.proper_ends[i].len() != 1 {
                    return Err(violation(
                        m,
                        c,
                        "a proper block word reaches more than one proper state".into(),
                    ));
                }
                reached.extend(analysis.proper_ends[i].iter().cloned());
            }
            if reached != expected {
                return Err(violation(
                    m,
                    c,
                    "proper block words do not land on the two successor configurations".into(),
                ));
            }
            if !analysis.executable.iter().all(|&e| e) {
                return Err(violation(
                    m,
                    c,
                    "a block word is not executable from a live configuration".into(),
                ));
            }
            if m.mode(c.state) == StateMode::Existential {
                let zeta_succ = product.successors_unchecked(&g, zeta);
                if zeta_succ.len() != 2 {
                    return Err(violation(
                        m,
                        c,
                        format!(
                            "the choice letter reaches {} states from an existential configuration, expected 2",
                            zeta_succ.len()
                        ),
                    ));
                }
                for &i in &proper_words {
                    if words[i].first() != Some(&zeta) {
                        return Err(violation(
                            m,
                            c,
                            "an existential proper block word does not start with the choice letter".into(),
                        ));
                    }
                }
            }
        } else {
            let boundary = super::tm::boundary_exit(m, c);
            if !proper_words.is_empty() {
                return Err(violation(
                    m,
                    c,
                    "a halted configuration still reaches a proper state".into(),
                ));
            }
            if !boundary && !product.successors_unchecked(&g, zeta).is_empty() {
                return Err(violation(
                    m,
                    c,
                    "the product answers the choice letter from a blocked configuration".into(),
                ));
            }
        }
    }
    Ok(SteppingReport {
        configurations: configs.len(),
        words: words.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reductions::{exptime_encode, parse_tm, pspace_encode};

    #[test]
    fn pspace_stepping_holds_on_the_bouncer() {
        let (m, input) = parse_tm(
            "tm bounce\nkind: det\nstates: q0 q1\ntape: a b\ninitial: q0\n\
             trans: q0 a -> q1 b R\ntrans: q1 a -> q0 a L\ntrans: q1 b -> q0 b L\n\
             trans: q0 b -> q1 a R\ninput: a a\n",
        )
        .unwrap();
        let inst = pspace_encode(&m, &input).unwrap();
        let report = verify_pspace_stepping(&inst, &m, 1 << 16).unwrap();
        // |Q| * n * |Gamma|^n configurations of length 2.
        assert_eq!(report.configurations, 2 * 2 * 4);
        assert!(report.words > 0);
    }

    #[test]
    fn exptime_stepping_holds_on_an_alternating_bouncer() {
        let (m, input) = parse_tm(
            "tm ab\nkind: alt\nstates: q0 q1\ntape: a b\nmode: q0 exist q1 univ\ninitial: q0\n\
             trans: q0 a -> q1 a R\ntrans: q0 a -> q1 b R\n\
             trans: q0 b -> q1 a R\ntrans: q0 b -> q1 b R\n\
             trans: q1 a -> q0 a L\ntrans: q1 a -> q0 b L\n\
             trans: q1 b -> q0 a L\ntrans: q1 b -> q0 b L\ninput: a a\n",
        )
        .unwrap();
        let inst = exptime_encode(&m, &input).unwrap();
        let report = verify_exptime_stepping(&inst, &m, 1 << 16).unwrap();
        assert!(report.configurations > 0);
        assert!(report.words > 0);
    }

    #[test]
    fn a_broken_goal_fails_stepping() {
        let (m, input) = parse_tm(
            "tm bounce\nkind: det\nstates: q0 q1\ntape: a\ninitial: q0\n\
             trans: q0 a -> q1 a R\ntrans: q1 a -> q0 a L\ninput: a a\n",
        )
        .unwrap();
        let mut inst = pspace_encode(&m, &input).unwrap();
        // Redirect service 2's arrival on `q1.a.2` to `top`: the unique
        // proper block word from the initial configuration now dies.
        let broken = inst.services[1]
            .to_saut()
            .replace("trans: a q1.a.2 -> q1.a", "trans: a q1.a.2 -> top");
        assert_ne!(broken, inst.services[1].to_saut());
        inst.services[1] = crate::automata::ServiceAutomaton::parse(&broken).unwrap();
        assert!(verify_pspace_stepping(&inst, &m, 1 << 16).is_err());
    }
}
