//! Bisimilarity between a deterministic goal and an asynchronous product,
//! decided through banal sequences.
//!
//! A banal sequence orders product moves process-wise: every move of service
//! 1 first, then of service 2, and so on. Every reachable global state is
//! reached by some banal run, and tracking the (deterministic, minimized)
//! goal alongside gives *banally-reachable configurations*. Bisimilarity
//! holds iff
//!
//! - condition A: every banally-reachable configuration enables the same
//!   actions on both sides, and
//! - condition B: inserting one extra move of process `i` right after the
//!   phase of process `i`, then continuing both branches with an identical
//!   suffix over later processes, never makes the goal end in two different
//!   states.
//!
//! The goal is minimized first, so "different state" is exactly
//! "not bisimilar" on the goal side. [`bisim_oracle`] is an independent
//! partition-refinement check on explicit automata, used to cross-validate
//! the conditions and by `--oracle` runs.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::automata::{Nfa, ServiceAutomaton, StateId};
use crate::labels::ActionLabel;
use crate::product::{GlobalState, ProductView};

/// Which of the two banal-sequence conditions failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailedCondition {
    ConditionA,
    ConditionB,
}

/// A banally-reachable configuration where the enabled sets differ.
#[derive(Clone, Debug)]
pub struct ConditionAWitness {
    /// Banal run to the offending configuration, `(label, mover)` 0-based.
    pub run: Vec<(ActionLabel, usize)>,
    /// A label enabled on exactly one side.
    pub label: ActionLabel,
    /// True when the goal enables `label` and the product does not.
    pub goal_enables: bool,
}

/// Two runs over the same moves, one banal and one with the extra move
/// deferred to the end, that leave the goal in different states.
#[derive(Clone, Debug)]
pub struct ConditionBWitness {
    pub banal_run: Vec<(ActionLabel, usize)>,
    pub deferred_run: Vec<(ActionLabel, usize)>,
    /// Names of the differing states of the minimized goal, banal first.
    pub goal_states: (String, String),
}

#[derive(Clone, Debug)]
pub enum BisimViolation {
    A(ConditionAWitness),
    B(ConditionBWitness),
}

pub struct BisimVerdict {
    pub bisimilar: bool,
    pub violation: Option<BisimViolation>,
    /// The minimized goal the conditions were evaluated on.
    pub minimized_goal: ServiceAutomaton,
}

/// Line-oriented report; `TRACE:` lines use the simulation trace syntax
/// with 1-based movers.
pub fn render_bisim_report(v: &BisimVerdict) -> String {
    fn trace_line(steps: &[(ActionLabel, usize)]) -> String {
        let mut s = String::from("TRACE:");
        for (l, m) in steps {
            s.push_str(&format!(" {}@{}", l, m + 1));
        }
        s.push('\n');
        s
    }
    let mut out = String::new();
    match &v.violation {
        None => out.push_str("VERDICT: BISIMILAR\n"),
        Some(BisimViolation::A(w)) => {
            out.push_str("VERDICT: NOT-BISIMILAR\n");
            out.push_str("FAILED: condition-A\n");
            out.push_str(&trace_line(&w.run));
            out.push_str(&format!(
                "DIFFER: {} (enabled in {} only)\n",
                w.label,
                if w.goal_enables { "goal" } else { "product" }
            ));
        }
        Some(BisimViolation::B(w)) => {
            out.push_str("VERDICT: NOT-BISIMILAR\n");
            out.push_str("FAILED: condition-B\n");
            out.push_str(&trace_line(&w.banal_run));
            out.push_str(&trace_line(&w.deferred_run));
            out.push_str(&format!(
                "STATES: {} {}\n",
                w.goal_states.0, w.goal_states.1
            ));
        }
    }
    out
}

struct ConfigNode {
    goal: StateId,
    global: GlobalState,
    /// Phase the node was first discovered in (1-based service; 0 = root).
    phase: usize,
    parent: Option<(usize, ActionLabel, usize)>,
}

struct Exploration {
    nodes: Vec<ConfigNode>,
}

impl Exploration {
    fn run_to(&self, id: usize) -> Vec<(ActionLabel, usize)> {
        let mut steps = Vec::new();
        let mut cur = id;
        while let Some((p, l, m)) = self.nodes[cur].parent {
            steps.push((l, m));
            cur = p;
        }
        steps.reverse();
        steps
    }
}

/// Enumerates all banally-reachable configurations phase by phase, checking
/// the condition-A equality at every configuration as it is discovered.
fn explore_banal(
    goal: &ServiceAutomaton,
    product: &ProductView,
) -> Result<Exploration, ConditionAWitness> {
    let check = |expl: &Exploration, id: usize| -> Result<(), ConditionAWitness> {
        let node = &expl.nodes[id];
        let goal_enabled = goal.enabled_actions(node.goal).expect("state in range");
        let product_enabled = product.enabled_unchecked(&node.global);
        if goal_enabled == product_enabled {
            return Ok(());
        }
        let mut diff: Vec<(ActionLabel, bool)> = goal_enabled
            .symmetric_difference(&product_enabled)
            .map(|&l| (l, goal_enabled.contains(&l)))
            .collect();
        diff.sort_by_key(|(l, _)| l.as_str());
        let (label, goal_enables) = diff[0];
        Err(ConditionAWitness {
            run: expl.run_to(id),
            label,
            goal_enables,
        })
    };

    let mut expl = Exploration {
        nodes: vec![ConfigNode {
            goal: goal.initial(),
            global: product.initial(),
            phase: 0,
            parent: None,
        }],
    };
    check(&expl, 0)?;

    let mut seen: HashMap<(StateId, GlobalState), usize> = HashMap::new();
    seen.insert((goal.initial(), product.initial()), 0);

    for (mover, svc) in product.services().iter().enumerate() {
        let phase = mover + 1;
        let mut labels: Vec<ActionLabel> = svc.alphabet().to_vec();
        labels.sort_by_key(|l| l.as_str());
        // Everything discovered so far is reachable with this phase still
        // empty, so the whole node list seeds the phase queue.
        let mut queue: VecDeque<usize> = (0..expl.nodes.len()).collect();
        while let Some(id) = queue.pop_front() {
            let local = expl.nodes[id].global.components()[mover];
            let s = expl.nodes[id].goal;
            for &a in &labels {
                let Some(next_local) = svc.successor(local, a) else {
                    continue;
                };
                // Product-enabled at a banally-reachable configuration, so
                // condition A (already checked at `id`) makes it goal-enabled.
                let s2 = goal
                    .successor(s, a)
                    .expect("condition A was checked at the source configuration");
                let g2 = expl.nodes[id].global.with_component(mover, next_local);
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry((s2, g2.clone())) {
                    let nid = expl.nodes.len();
                    expl.nodes.push(ConfigNode {
                        goal: s2,
                        global: g2,
                        phase,
                        parent: Some((id, a, mover)),
                    });
                    e.insert(nid);
                    check(&expl, nid)?;
                    queue.push_back(nid);
                }
            }
        }
    }
    Ok(expl)
}

/// Condition A: the same actions are possible from both sides of every
/// banally-reachable configuration.
///
/// The goal must be bisimulation-minimal (see [`ServiceAutomaton::minimize_bisim`]).
pub fn condition_a(
    goal: &ServiceAutomaton,
    product: &ProductView,
) -> Result<(), ConditionAWitness> {
    explore_banal(goal, product).map(|_| ())
}

/// Condition B: no banal prefix, extra move and common suffix make the goal
/// end in two different states.
///
/// Requires condition A to hold; a goal-side dead end during the search is a
/// broken precondition and panics.
pub fn condition_b(
    goal: &ServiceAutomaton,
    product: &ProductView,
) -> Result<(), ConditionBWitness> {
    let expl = explore_banal(goal, product)
        .unwrap_or_else(|_| panic!("condition A must hold before checking condition B"));

    let n = product.len();
    let services = product.services();
    // Pair states (branch label, suffix phase, banal-side goal, deferred-side
    // goal, local state of the phase's service) evolve identically across
    // branch points, so memoization is global.
    let mut seen: HashSet<(ActionLabel, usize, StateId, StateId, StateId)> = HashSet::new();

    struct PairNode {
        u1: StateId,
        u2: StateId,
        /// 1-based service currently allowed to move; n+1 means done.
        phase: usize,
        local: Option<StateId>,
        parent: PairParent,
    }
    enum PairParent {
        Root {
            config: usize,
            beta: ActionLabel,
            mover: usize,
        },
        Step {
            node: usize,
            label: ActionLabel,
            mover: usize,
        },
        Advance {
            node: usize,
        },
    }

    let follow = |s: StateId, a: ActionLabel| -> StateId {
        goal.successor(s, a)
            .expect("condition A guarantees the goal can follow the product here")
    };

    for i in 1..=n {
        let mover = i - 1;
        let svc = &services[mover];
        let mut betas: Vec<ActionLabel> = svc.alphabet().to_vec();
        betas.sort_by_key(|l| l.as_str());
        // Branch points: configurations reachable with phases 1..=i only.
        for cfg in 0..expl.nodes.len() {
            if expl.nodes[cfg].phase > i {
                continue;
            }
            let s1 = expl.nodes[cfg].goal;
            let t1 = &expl.nodes[cfg].global;
            for &beta in &betas {
                if svc.successor(t1.components()[mover], beta).is_none() {
                    continue;
                }
                let u1 = follow(s1, beta);
                let u2 = s1;

                let mut nodes: Vec<PairNode> = Vec::new();
                let mut queue: VecDeque<usize> = VecDeque::new();
                let start_phase = i + 1;
                let local0 = if start_phase <= n {
                    Some(services[start_phase - 1].initial())
                } else {
                    None
                };
                if seen.insert((beta, start_phase, u1, u2, local0.unwrap_or(0))) {
                    nodes.push(PairNode {
                        u1,
                        u2,
                        phase: start_phase,
                        local: local0,
                        parent: PairParent::Root {
                            config: cfg,
                            beta,
                            mover,
                        },
                    });
                    queue.push_back(0);
                }

                while let Some(id) = queue.pop_front() {
                    let (u1, u2, phase, local) =
                        (nodes[id].u1, nodes[id].u2, nodes[id].phase, nodes[id].local);
                    // The deferred branch may take beta here; both branches
                    // then sit on the same global state and must agree on
                    // the goal state.
                    let deferred = follow(u2, beta);
                    if deferred != u1 {
                        // Reconstruct both runs.
                        let mut suffix: Vec<(ActionLabel, usize)> = Vec::new();
                        let mut cur = id;
                        let (root_cfg, root_beta, root_mover) = loop {
                            match &nodes[cur].parent {
                                PairParent::Root {
                                    config,
                                    beta,
                                    mover,
                                } => break (*config, *beta, *mover),
                                PairParent::Step { node, label, mover } => {
                                    suffix.push((*label, *mover));
                                    cur = *node;
                                }
                                PairParent::Advance { node } => cur = *node,
                            }
                        };
                        suffix.reverse();
                        let prefix = expl.run_to(root_cfg);
                        let mut banal_run = prefix.clone();
                        banal_run.push((root_beta, root_mover));
                        banal_run.extend(suffix.iter().copied());
                        let mut deferred_run = prefix;
                        deferred_run.extend(suffix.iter().copied());
                        deferred_run.push((root_beta, root_mover));
                        return Err(ConditionBWitness {
                            banal_run,
                            deferred_run,
                            goal_states: (
                                goal.state_name(u1).to_string(),
                                goal.state_name(deferred).to_string(),
                            ),
                        });
                    }

                    if phase > n {
                        continue;
                    }
                    let local = local.expect("phase <= n has a local state");
                    let phase_svc = &services[phase - 1];
                    let mut labels: Vec<ActionLabel> = phase_svc.alphabet().to_vec();
                    labels.sort_by_key(|l| l.as_str());
                    for &c in &labels {
                        if let Some(next_local) = phase_svc.successor(local, c) {
                            let v1 = follow(u1, c);
                            let v2 = follow(u2, c);
                            if seen.insert((beta, phase, v1, v2, next_local)) {
                                nodes.push(PairNode {
                                    u1: v1,
                                    u2: v2,
                                    phase,
                                    local: Some(next_local),
                                    parent: PairParent::Step {
                                        node: id,
                                        label: c,
                                        mover: phase - 1,
                                    },
                                });
                                queue.push_back(nodes.len() - 1);
                            }
                        }
                    }
                    // Close this phase and hand over to the next service.
                    let next_phase = phase + 1;
                    let next_local = if next_phase <= n {
                        Some(services[next_phase - 1].initial())
                    } else {
                        None
                    };
                    if seen.insert((beta, next_phase, u1, u2, next_local.unwrap_or(0))) {
                        nodes.push(PairNode {
                            u1,
                            u2,
                            phase: next_phase,
                            local: next_local,
                            parent: PairParent::Advance { node: id },
                        });
                        queue.push_back(nodes.len() - 1);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Decides bisimilarity of `goal` and the product: minimizes the goal, then
/// checks conditions A and B in that order.
pub fn check_bisimilar(goal: &ServiceAutomaton, product: &ProductView) -> BisimVerdict {
    let minimized = goal.minimize_bisim();
    if let Err(w) = condition_a(&minimized, product) {
        return BisimVerdict {
            bisimilar: false,
            violation: Some(BisimViolation::A(w)),
            minimized_goal: minimized,
        };
    }
    if let Err(w) = condition_b(&minimized, product) {
        return BisimVerdict {
            bisimilar: false,
            violation: Some(BisimViolation::B(w)),
            minimized_goal: minimized,
        };
    }
    BisimVerdict {
        bisimilar: true,
        violation: None,
        minimized_goal: minimized,
    }
}

/// Partition refinement on the disjoint union of two explicit automata;
/// true iff the initial states end in the same block. Used as the oracle
/// for the banal-sequence method.
pub fn bisim_oracle(x: &Nfa, y: &Nfa) -> bool {
    let nx = x.state_count();
    let total = nx + y.state_count();
    let succ = |s: usize, a: ActionLabel| -> Vec<usize> {
        if s < nx {
            x.successors(s, a).iter().copied().collect()
        } else {
            y.successors(s - nx, a).iter().map(|&q| q + nx).collect()
        }
    };
    let enabled = |s: usize| -> Vec<ActionLabel> {
        let set = if s < nx {
            x.enabled_actions(s).expect("in range")
        } else {
            y.enabled_actions(s - nx).expect("in range")
        };
        let mut v: Vec<ActionLabel> = set.into_iter().collect();
        v.sort_by_key(|l| l.as_str());
        v
    };

    // A state's signature: per enabled label, the successor blocks.
    type Signature = Vec<(ActionLabel, Vec<usize>)>;
    let mut block: Vec<usize> = vec![0; total];
    let mut block_count = 1;
    loop {
        let mut sig_to_block: HashMap<(usize, Signature), usize> = HashMap::new();
        let mut next = vec![0; total];
        let mut count = 0;
        for s in 0..total {
            let mut sig: Vec<(ActionLabel, Vec<usize>)> = Vec::new();
            for a in enabled(s) {
                let mut blocks: Vec<usize> = succ(s, a).into_iter().map(|q| block[q]).collect();
                blocks.sort_unstable();
                blocks.dedup();
                sig.push((a, blocks));
            }
            let key = (block[s], sig);
            let id = *sig_to_block.entry(key).or_insert_with(|| {
                let id = count;
                count += 1;
                id
            });
            next[s] = id;
        }
        if count == block_count {
            return next[x.initial()] == next[y.initial() + nx];
        }
        block = next;
        block_count = count;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::simulates;

    fn svc(text: &str) -> ServiceAutomaton {
        ServiceAutomaton::parse(text).unwrap()
    }

    fn two_disjoint() -> Vec<ServiceAutomaton> {
        vec![
            svc("automaton A1\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\n"),
            svc("automaton A2\nstates: q0 q1\nalphabet: b\ninitial: q0\ntrans: q0 b -> q1\n"),
        ]
    }

    #[test]
    fn minimized_explicit_product_is_bisimilar() {
        let p = ProductView::new(two_disjoint()).unwrap();
        let explicit = p.explicit(1000).unwrap();
        // The explicit product of disjoint services is deterministic.
        let as_service = ServiceAutomaton::parse(&explicit.to_saut()).unwrap();
        let goal = as_service.minimize_bisim();
        let verdict = check_bisimilar(&goal, &p);
        assert!(verdict.bisimilar, "{:?}", verdict.violation);
        assert!(condition_a(&verdict.minimized_goal, &p).is_ok());
        assert!(condition_b(&verdict.minimized_goal, &p).is_ok());
        // Bisimulation refines simulation.
        assert!(simulates(&goal, &p, 1 << 20).unwrap().simulated);
        // Oracle agrees.
        assert!(bisim_oracle(&goal.to_nfa(), &explicit));
    }

    #[test]
    fn single_interleaving_fails_condition_a() {
        // Goal does only `a` then `b`; the product also allows `b` first.
        let goal = svc("automaton B\nstates: s0 s1 s2\nalphabet: a b\ninitial: s0\ntrans: s0 a -> s1\ntrans: s1 b -> s2\n");
        let p = ProductView::new(two_disjoint()).unwrap();
        let verdict = check_bisimilar(&goal, &p);
        assert!(!verdict.bisimilar);
        match verdict.violation.clone().unwrap() {
            BisimViolation::A(w) => {
                assert!(w.run.is_empty());
                assert_eq!(w.label.as_str(), "b");
                assert!(!w.goal_enables);
            }
            other => panic!("expected a condition-A witness, got {other:?}"),
        }
        assert!(!bisim_oracle(&goal.to_nfa(), &p.explicit(100).unwrap()));
    }

    #[test]
    fn product_label_outside_goal_alphabet_fails_condition_a() {
        let goal = svc("automaton B\nstates: s0\nalphabet: a\ninitial: s0\ntrans: s0 a -> s0\n");
        let a1 = svc("automaton A1\nstates: u\nalphabet: a x\ninitial: u\ntrans: u a -> u\ntrans: u x -> u\n");
        let p = ProductView::new(vec![a1]).unwrap();
        match check_bisimilar(&goal, &p).violation.unwrap() {
            BisimViolation::A(w) => {
                assert_eq!(w.label.as_str(), "x");
                assert!(!w.goal_enables);
            }
            other => panic!("expected condition-A, got {other:?}"),
        }
    }

    #[test]
    fn interleaving_sensitive_goal_fails_condition_b() {
        // The goal accepts both orders of a and b but distinguishes them
        // afterwards, which the commuting product cannot do. Condition A
        // holds along banal runs; condition B catches the deferred `a`.
        let goal = svc(
            "automaton B\nstates: s0 s1 s2 s3a s3b\nalphabet: a b\ninitial: s0\n\
             trans: s0 a -> s1\ntrans: s1 a -> s1\ntrans: s1 b -> s3a\ntrans: s3a a -> s3a\n\
             trans: s0 b -> s2\ntrans: s2 a -> s3b\n",
        );
        let a1 = svc("automaton A1\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\ntrans: p1 a -> p1\n");
        let a2 = svc("automaton A2\nstates: q0 q1\nalphabet: b\ninitial: q0\ntrans: q0 b -> q1\n");
        let p = ProductView::new(vec![a1, a2]).unwrap();

        let minimized = goal.minimize_bisim();
        assert_eq!(
            minimized.state_count(),
            goal.state_count(),
            "crafted goal is already minimal"
        );
        assert!(condition_a(&minimized, &p).is_ok());
        let verdict = check_bisimilar(&goal, &p);
        assert!(!verdict.bisimilar);
        let w = match verdict.violation.clone().unwrap() {
            BisimViolation::B(w) => w,
            other => panic!("expected condition-B, got {other:?}"),
        };

        // Witness replay: same multiset of moves, same product end state,
        // different goal states.
        let replay_product = |steps: &[(ActionLabel, usize)]| {
            let mut g = p.initial();
            for (l, m) in steps {
                let succs = p.successors(&g, *l).unwrap();
                let (_, g2) = succs.into_iter().find(|(i, _)| i == m).unwrap();
                g = g2;
            }
            g
        };
        let g1 = replay_product(&w.banal_run);
        let g2 = replay_product(&w.deferred_run);
        assert_eq!(g1, g2);
        let b1 = verdict
            .minimized_goal
            .run(
                verdict.minimized_goal.initial(),
                &w.banal_run.iter().map(|(l, _)| *l).collect::<Vec<_>>(),
            )
            .unwrap();
        let b2 = verdict
            .minimized_goal
            .run(
                verdict.minimized_goal.initial(),
                &w.deferred_run.iter().map(|(l, _)| *l).collect::<Vec<_>>(),
            )
            .unwrap();
        assert_ne!(b1, b2);
        assert_eq!(verdict.minimized_goal.state_name(b1), w.goal_states.0);
        assert_eq!(verdict.minimized_goal.state_name(b2), w.goal_states.1);

        // The oracle agrees the two are not bisimilar.
        assert!(!bisim_oracle(&goal.to_nfa(), &p.explicit(100).unwrap()));
        let report = render_bisim_report(&verdict);
        assert!(report.contains("FAILED: condition-B"));
        assert!(report.contains("STATES: "));
    }

    #[test]
    fn single_service_condition_b_vacuous() {
        let a1 = svc("automaton A1\nstates: u0 u1\nalphabet: a b\ninitial: u0\ntrans: u0 a -> u1\ntrans: u1 b -> u0\n");
        let goal = a1.clone().minimize_bisim();
        let p = ProductView::new(vec![a1]).unwrap();
        assert!(condition_b(&goal, &p).is_ok());
        assert!(check_bisimilar(&goal, &p).bisimilar);
    }

    #[test]
    fn oracle_basics() {
        let x = svc("automaton X\nstates: s\nalphabet: a\ninitial: s\ntrans: s a -> s\n").to_nfa();
        let y = svc("automaton Y\nstates: t\nalphabet: a\ninitial: t\n").to_nfa();
        assert!(bisim_oracle(&x, &x));
        assert!(!bisim_oracle(&x, &y));
    }
}
