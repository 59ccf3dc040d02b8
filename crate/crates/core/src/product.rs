//! The fully asynchronous product of service automata.
//!
//! A global state is a tuple of per-service states; on each step exactly one
//! component moves and the others stay put, with no synchronization even on
//! shared letters. The product is therefore nondeterministic whenever a
//! letter is enabled in more than one component. [`ProductView`] answers
//! successor queries without materializing the state space;
//! [`ProductView::explicit`] builds the reachable part as an [`Nfa`] when it
//! fits a cap.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::automata::{AutomatonBuilder, Nfa, ServiceAutomaton, StateId};
use crate::labels::ActionLabel;

/// A tuple of component states, one per service.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalState(pub Box<[StateId]>);

impl GlobalState {
    pub fn components(&self) -> &[StateId] {
        &self.0
    }

    /// Copy with component `i` replaced.
    pub fn with_component(&self, i: usize, s: StateId) -> GlobalState {
        let mut v = self.0.to_vec();
        v[i] = s;
        GlobalState(v.into_boxed_slice())
    }
}

impl fmt::Debug for GlobalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GlobalState({:?})", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProductError {
    #[error("a product needs at least one service")]
    Empty,
    #[error("global state has {got} components, product has {expected} services")]
    WrongArity { got: usize, expected: usize },
    #[error("component {component} is {state}, out of range for service {service}")]
    ComponentOutOfRange {
        component: usize,
        state: StateId,
        service: String,
    },
    #[error("explicit product exceeds the state cap ({cap}); reached {reached} states")]
    CapExceeded { cap: usize, reached: usize },
}

/// On-the-fly view of the asynchronous product of an ordered service list.
///
/// The alphabet is the exact union of the component alphabets, ordered by
/// first appearance. The view is immutable and all queries are pure.
#[derive(Clone, Debug)]
pub struct ProductView {
    services: Vec<ServiceAutomaton>,
    alphabet: Vec<ActionLabel>,
    /// Services whose alphabet contains each union letter, ascending.
    owners: HashMap<ActionLabel, Vec<usize>>,
}

impl ProductView {
    pub fn new(services: Vec<ServiceAutomaton>) -> Result<Self, ProductError> {
        if services.is_empty() {
            return Err(ProductError::Empty);
        }
        let mut alphabet = Vec::new();
        let mut owners: HashMap<ActionLabel, Vec<usize>> = HashMap::new();
        for (i, svc) in services.iter().enumerate() {
            for &l in svc.alphabet() {
                let entry = owners.entry(l).or_insert_with(|| {
                    alphabet.push(l);
                    Vec::new()
                });
                entry.push(i);
            }
        }
        Ok(ProductView {
            services,
            alphabet,
            owners,
        })
    }

    pub fn services(&self) -> &[ServiceAutomaton] {
        &self.services
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    /// Union alphabet in first-appearance order.
    pub fn alphabet(&self) -> &[ActionLabel] {
        &self.alphabet
    }

    /// Indices of services whose alphabet contains `l`, ascending.
    pub fn owners(&self, l: ActionLabel) -> &[usize] {
        self.owners.get(&l).map(Vec::as_slice).unwrap_or(&[])
    }

    /// True when component alphabets are pairwise disjoint.
    pub fn alphabets_disjoint(&self) -> bool {
        self.owners.values().all(|v| v.len() == 1)
    }

    pub fn initial(&self) -> GlobalState {
        GlobalState(self.services.iter().map(|s| s.initial()).collect())
    }

    pub fn check_state(&self, g: &GlobalState) -> Result<(), ProductError> {
        if g.0.len() != self.services.len() {
            return Err(ProductError::WrongArity {
                got: g.0.len(),
                expected: self.services.len(),
            });
        }
        for (i, (&s, svc)) in g.0.iter().zip(&self.services).enumerate() {
            if s >= svc.state_count() {
                return Err(ProductError::ComponentOutOfRange {
                    component: i,
                    state: s,
                    service: svc.name().to_string(),
                });
            }
        }
        Ok(())
    }

    /// All `a`-successors of `g` with the index of the service that moved,
    /// in ascending service order.
    pub fn successors(
        &self,
        g: &GlobalState,
        a: ActionLabel,
    ) -> Result<Vec<(usize, GlobalState)>, ProductError> {
        self.check_state(g)?;
        Ok(self.successors_unchecked(g, a))
    }

    pub(crate) fn successors_unchecked(
        &self,
        g: &GlobalState,
        a: ActionLabel,
    ) -> Vec<(usize, GlobalState)> {
        let mut out = Vec::new();
        for &i in self.owners(a) {
            if let Some(next) = self.services[i].successor(g.0[i], a) {
                out.push((i, g.with_component(i, next)));
            }
        }
        out
    }

    /// Letters enabled at `g`: the union of the letters enabled in each
    /// component.
    pub fn enabled_actions(&self, g: &GlobalState) -> Result<BTreeSet<ActionLabel>, ProductError> {
        self.check_state(g)?;
        Ok(self.enabled_unchecked(g))
    }

    pub(crate) fn enabled_unchecked(&self, g: &GlobalState) -> BTreeSet<ActionLabel> {
        let mut out = BTreeSet::new();
        for (i, svc) in self.services.iter().enumerate() {
            out.extend(
                svc.enabled_actions(g.0[i])
                    .expect("component in range"),
            );
        }
        out
    }

    /// Printable form `(t1|t2|...|tn)` of a global state.
    pub fn state_name(&self, g: &GlobalState) -> String {
        let parts: Vec<&str> =
            g.0.iter()
                .zip(&self.services)
                .map(|(&s, svc)| svc.state_name(s))
                .collect();
        format!("({})", parts.join("|"))
    }

    /// Materializes the reachable part as an [`Nfa`] over the union
    /// alphabet. States are named `(t1|...|tn)` in BFS discovery order.
    pub fn explicit(&self, state_cap: usize) -> Result<Nfa, ProductError> {
        let name = format!(
            "prod({})",
            self.services
                .iter()
                .map(|s| s.name())
                .collect::<Vec<_>>()
                .join(",")
        );
        let mut builder = AutomatonBuilder::new(&name);
        for &l in &self.alphabet {
            builder.label(l);
        }

        let mut ids: HashMap<GlobalState, usize> = HashMap::new();
        let mut order: Vec<GlobalState> = Vec::new();
        let init = self.initial();
        ids.insert(init.clone(), 0);
        order.push(init.clone());
        builder.state(&self.state_name(&init));
        builder.initial(&self.state_name(&init));

        let mut queue: VecDeque<usize> = VecDeque::new();
        queue.push_back(0);
        let mut edges: Vec<(usize, ActionLabel, usize)> = Vec::new();
        while let Some(idx) = queue.pop_front() {
            let g = order[idx].clone();
            for &a in &self.alphabet {
                for (_, succ) in self.successors_unchecked(&g, a) {
                    let next_id = match ids.get(&succ) {
                        Some(&id) => id,
                        None => {
                            let id = order.len();
                            if id >= state_cap {
                                return Err(ProductError::CapExceeded {
                                    cap: state_cap,
                                    reached: id + 1,
                                });
                            }
                            ids.insert(succ.clone(), id);
                            order.push(succ.clone());
                            builder.state(&self.state_name(&succ));
                            queue.push_back(id);
                            id
                        }
                    };
                    edges.push((idx, a, next_id));
                }
            }
        }
        let names: Vec<String> = order.iter().map(|g| self.state_name(g)).collect();
        let mut seen: HashSet<(usize, ActionLabel, usize)> = HashSet::new();
        for (src, a, dst) in edges {
            if seen.insert((src, a, dst)) {
                builder.trans(&names[src], a, &names[dst]);
            }
        }
        builder.build_nfa().map_err(|_| ProductError::Empty)
    }

    /// Enumerates banal runs: all moves of service 1, then of service 2, and
    /// so on, each phase possibly empty. Within a phase, states already seen
    /// in that phase context are not re-expanded. `visit` is called once per
    /// discovered (phase, global state) point with the run that reached it;
    /// every product-reachable global state is visited at least once.
    pub fn banal_runs<F: FnMut(&BanalRun<'_>)>(&self, mut visit: F) {
        // Nodes store parent links so runs can be reconstructed on demand.
        struct Node {
            state: GlobalState,
            phase: usize,
            parent: Option<(usize, ActionLabel, usize)>, // node, label, mover
        }
        let mut nodes: Vec<Node> = vec![Node {
            state: self.initial(),
            phase: 0,
            parent: None,
        }];
        let mut frontier: Vec<usize> = vec![0];
        let mut steps: Vec<(ActionLabel, usize)> = Vec::new();

        let emit =
            |nodes: &[Node], id: usize, steps: &mut Vec<(ActionLabel, usize)>, visit: &mut F| {
                steps.clear();
                let mut cur = id;
                while let Some((p, l, m)) = nodes[cur].parent {
                    steps.push((l, m));
                    cur = p;
                }
                steps.reverse();
                visit(&BanalRun {
                    steps,
                    end: &nodes[id].state,
                    phase: nodes[id].phase,
                });
            };

        emit(&nodes, 0, &mut steps, &mut visit);

        for mover in 0..self.services.len() {
            let svc = &self.services[mover];
            let mut labels: Vec<ActionLabel> = svc.alphabet().to_vec();
            labels.sort_by_key(|l| l.as_str());
            // One dedup per phase: (global state) fully captures the phase
            // context because components > mover are still initial and
            // components < mover are frozen.
            let mut seen: HashSet<GlobalState> = HashSet::new();
            let mut next_frontier: Vec<usize> = Vec::new();
            let mut queue: VecDeque<usize> = VecDeque::new();
            for &id in &frontier {
                if seen.insert(nodes[id].state.clone()) {
                    queue.push_back(id);
                    next_frontier.push(id);
                }
            }
            while let Some(id) = queue.pop_front() {
                let local = nodes[id].state.0[mover];
                for &a in &labels {
                    if let Some(next_local) = svc.successor(local, a) {
                        let succ = nodes[id].state.with_component(mover, next_local);
                        if seen.insert(succ.clone()) {
                            let nid = nodes.len();
                            nodes.push(Node {
                                state: succ,
                                phase: mover + 1,
                                parent: Some((id, a, mover)),
                            });
                            emit(&nodes, nid, &mut steps, &mut visit);
                            queue.push_back(nid);
                            next_frontier.push(nid);
                        }
                    }
                }
            }
            frontier = next_frontier;
        }
    }
}

/// One enumerated banal run, passed to the `banal_runs` callback.
pub struct BanalRun<'a> {
    /// The `(label, mover)` steps from the initial state.
    pub steps: &'a [(ActionLabel, usize)],
    /// Global state reached.
    pub end: &'a GlobalState,
    /// Highest service index that has moved (1-based; 0 = empty run).
    pub phase: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svc(text: &str) -> ServiceAutomaton {
        ServiceAutomaton::parse(text).unwrap()
    }

    fn two_disjoint() -> ProductView {
        let a1 = svc("automaton A1\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\n");
        let a2 = svc("automaton A2\nstates: q0 q1\nalphabet: b\ninitial: q0\ntrans: q0 b -> q1\n");
        ProductView::new(vec![a1, a2]).unwrap()
    }

    #[test]
    fn successor_unique_owner() {
        let p = two_disjoint();
        let a = ActionLabel::new("a").unwrap();
        let succ = p.successors(&p.initial(), a).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].0, 0);
        assert_eq!(succ[0].1.components(), &[1, 0]);
    }

    #[test]
    fn shared_label_yields_two_successors() {
        let a1 = svc("automaton A1\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\n");
        let a2 = svc("automaton A2\nstates: q0 q1\nalphabet: a\ninitial: q0\ntrans: q0 a -> q1\n");
        let p = ProductView::new(vec![a1, a2]).unwrap();
        let a = ActionLabel::new("a").unwrap();
        let succ = p.successors(&p.initial(), a).unwrap();
        assert_eq!(succ.len(), 2);
        assert_eq!(succ[0].0, 0);
        assert_eq!(succ[1].0, 1);
        assert!(!p.alphabets_disjoint());
    }

    #[test]
    fn disabled_label_yields_nothing() {
        let p = two_disjoint();
        let a = ActionLabel::new("a").unwrap();
        let g = p.initial().with_component(0, 1);
        assert!(p.successors(&g, a).unwrap().is_empty());
    }

    #[test]
    fn malformed_state_is_rejected() {
        let p = two_disjoint();
        let a = ActionLabel::new("a").unwrap();
        let bad = GlobalState(vec![0].into_boxed_slice());
        assert!(matches!(
            p.successors(&bad, a),
            Err(ProductError::WrongArity { .. })
        ));
        let oob = GlobalState(vec![9, 0].into_boxed_slice());
        assert!(matches!(
            p.successors(&oob, a),
            Err(ProductError::ComponentOutOfRange { component: 0, .. })
        ));
    }

    #[test]
    fn explicit_single_factor_is_identity() {
        let a1 = svc("automaton A1\nstates: p0 p1\nalphabet: a b\ninitial: p0\ntrans: p0 a -> p1\ntrans: p1 b -> p0\n");
        let p = ProductView::new(vec![a1.clone()]).unwrap();
        let e = p.explicit(100).unwrap();
        assert_eq!(e.state_count(), 2);
        assert!(e.is_deterministic());
        assert_eq!(e.transitions().count(), a1.transitions().count());
    }

    #[test]
    fn explicit_full_grid() {
        let a1 = svc("automaton A1\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\ntrans: p1 a -> p0\n");
        let a2 = svc("automaton A2\nstates: q0 q1\nalphabet: b\ninitial: q0\ntrans: q0 b -> q1\ntrans: q1 b -> q0\n");
        let p = ProductView::new(vec![a1, a2]).unwrap();
        let e = p.explicit(100).unwrap();
        assert_eq!(e.state_count(), 4);
        assert_eq!(e.state_id("(p0|q0)"), Some(0));
    }

    #[test]
    fn explicit_cap() {
        let p = two_disjoint();
        assert!(matches!(
            p.explicit(1),
            Err(ProductError::CapExceeded { cap: 1, .. })
        ));
    }

    #[test]
    fn banal_frozen_services_single_empty_run() {
        let a1 = svc("automaton A1\nstates: p0\nalphabet: a\ninitial: p0\n");
        let a2 = svc("automaton A2\nstates: q0\nalphabet: b\ninitial: q0\n");
        let p = ProductView::new(vec![a1, a2]).unwrap();
        let mut runs = 0;
        p.banal_runs(|r| {
            assert!(r.steps.is_empty());
            runs += 1;
        });
        assert_eq!(runs, 1);
    }

    #[test]
    fn banal_end_states_cover_reachable_set() {
        let a1 = svc("automaton A1\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\ntrans: p1 a -> p0\n");
        let a2 = svc("automaton A2\nstates: q0 q1\nalphabet: b c\ninitial: q0\ntrans: q0 b -> q1\ntrans: q1 c -> q0\n");
        let a3 = svc("automaton A3\nstates: r0 r1 r2\nalphabet: d\ninitial: r0\ntrans: r0 d -> r1\ntrans: r1 d -> r2\n");
        let p = ProductView::new(vec![a1, a2, a3]).unwrap();
        let mut banal: HashSet<GlobalState> = HashSet::new();
        p.banal_runs(|r| {
            banal.insert(r.end.clone());
        });
        let e = p.explicit(10_000).unwrap();
        assert_eq!(banal.len(), e.state_count());
    }
}
