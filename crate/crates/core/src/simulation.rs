//! The simulation preorder between a goal automaton and a product.
//!
//! `goal ⊑ product` holds when every action the goal can take is matched by
//! some product move landing in a related pair, coinductively. The checker
//! computes the greatest simulation restricted to pairs reachable in the
//! simulation game, by counter-based deletion: a pair dies when some goal
//! action has no surviving product answer, and deaths propagate backwards.
//! The unrestricted fixpoint over an explicit product is kept as
//! [`largest_simulation_fullspace`], used as an oracle and by `--oracle`
//! runs.
//!
//! For pairwise disjoint component alphabets, [`simulates_disjoint`] decides
//! the same question in polynomial time: the goal is simulated by the
//! product iff it is simulated by each `A(i)`, the product in which every
//! component except `i` is replaced by a universal one-state automaton.

use std::collections::{HashSet, VecDeque};

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashSet};
use thiserror::Error;

use crate::automata::{Nfa, ServiceAutomaton, StateId};
use crate::labels::ActionLabel;
use crate::product::{GlobalState, ProductView};

/// Key-level view of global states: tuples are packed into one word when
/// the component counts allow it, and interned otherwise. All game
/// structures work on the keys.
struct GlobalCodec {
    /// Bit offset per component; empty means interned mode.
    shifts: Vec<u32>,
    widths: Vec<u32>,
    interned: IndexSet<GlobalState, FxBuildHasher>,
}

impl GlobalCodec {
    fn new(product: &ProductView) -> GlobalCodec {
        let widths: Vec<u32> = product
            .services()
            .iter()
            .map(|s| usize::BITS - (s.state_count().max(2) - 1).leading_zeros())
            .collect();
        let total: u32 = widths.iter().sum();
        if total <= 64 {
            let mut shifts = Vec::with_capacity(widths.len());
            let mut acc = 0;
            for &w in &widths {
                shifts.push(acc);
                acc += w;
            }
            GlobalCodec {
                shifts,
                widths,
                interned: IndexSet::default(),
            }
        } else {
            GlobalCodec {
                shifts: Vec::new(),
                widths,
                interned: IndexSet::default(),
            }
        }
    }

    fn packed(&self) -> bool {
        !self.shifts.is_empty()
    }

    fn encode(&mut self, g: &GlobalState) -> u64 {
        if self.packed() {
            let mut key = 0u64;
            for (i, &c) in g.components().iter().enumerate() {
                key |= (c as u64) << self.shifts[i];
            }
            key
        } else {
            self.interned.insert_full(g.clone()).0 as u64
        }
    }

    /// Key of an already-seen state; in packed mode every state has a key.
    fn lookup(&self, g: &GlobalState) -> Option<u64> {
        if self.packed() {
            let mut key = 0u64;
            for (i, &c) in g.components().iter().enumerate() {
                key |= (c as u64) << self.shifts[i];
            }
            Some(key)
        } else {
            self.interned.get_index_of(g).map(|i| i as u64)
        }
    }

    fn component(&self, key: u64, i: usize) -> usize {
        if self.packed() {
            ((key >> self.shifts[i]) & ((1u64 << self.widths[i]) - 1)) as usize
        } else {
            self.interned
                .get_index(key as usize)
                .expect("interned")
                .components()[i]
        }
    }

    fn with_component(&mut self, key: u64, i: usize, v: usize) -> u64 {
        if self.packed() {
            let mask = ((1u64 << self.widths[i]) - 1) << self.shifts[i];
            (key & !mask) | ((v as u64) << self.shifts[i])
        } else {
            let mut g = self
                .interned
                .get_index(key as usize)
                .expect("interned")
                .clone();
            g = g.with_component(i, v);
            self.encode(&g)
        }
    }

    fn decode(&self, key: u64, arity: usize) -> GlobalState {
        if self.packed() {
            GlobalState((0..arity).map(|i| self.component(key, i)).collect())
        } else {
            self.interned
                .get_index(key as usize)
                .expect("interned")
                .clone()
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimulationError {
    #[error("simulation game exceeds the pair cap ({cap}); reached {reached} pairs")]
    CapExceeded { cap: usize, reached: usize },
    #[error("service index {index} out of range for a product of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(
        "alphabets are not pairwise disjoint: `{label}` is shared by services {first} and {second}"
    )]
    AlphabetsNotDisjoint {
        label: String,
        first: usize,
        second: usize,
    },
}

/// A set of (goal state, global state) pairs closed under the simulation
/// condition, restricted to the game-reachable part.
pub struct SimulationRelation<'a> {
    goal: &'a ServiceAutomaton,
    product: &'a ProductView,
    codec: GlobalCodec,
    alive: FxHashSet<(u32, u64)>,
}

impl<'a> SimulationRelation<'a> {
    pub fn goal(&self) -> &'a ServiceAutomaton {
        self.goal
    }

    pub fn product(&self) -> &'a ProductView {
        self.product
    }

    pub fn len(&self) -> usize {
        self.alive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alive.is_empty()
    }

    pub fn contains(&self, s: StateId, g: &GlobalState) -> bool {
        match self.codec.lookup(g) {
            Some(key) => self.alive.contains(&(s as u32, key)),
            None => false,
        }
    }

    pub fn contains_initial(&self) -> bool {
        self.contains(self.goal.initial(), &self.product.initial())
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, GlobalState)> + '_ {
        let arity = self.product.len();
        self.alive
            .iter()
            .map(move |&(s, key)| (s as StateId, self.codec.decode(key, arity)))
    }

    /// One closure pass: every pair must answer every enabled goal action
    /// with a surviving successor pair.
    pub fn is_simulation_closed(&self) -> bool {
        for (s, g) in self.iter() {
            for a in self.goal.enabled_actions(s).expect("state in range") {
                let s2 = self.goal.successor(s, a).expect("enabled");
                let ok = self
                    .product
                    .successors_unchecked(&g, a)
                    .into_iter()
                    .any(|(_, g2)| self.contains(s2, &g2));
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

/// Outcome of a simulation check.
pub struct SimVerdict {
    pub simulated: bool,
    pub counterexample: Option<Counterexample>,
}

/// A winning strategy sketch for the goal side when simulation fails: after
/// replaying `steps`, the goal enables `stuck` and the product has no
/// `stuck`-move at all.
#[derive(Clone, Debug)]
pub struct Counterexample {
    /// `(label, mover)` steps; the mover is the product component that
    /// followed, 0-based.
    pub steps: Vec<(ActionLabel, usize)>,
    pub stuck: ActionLabel,
    pub description: String,
}

/// Line-oriented report: `VERDICT:`, then `TRACE:` and `STUCK:` on a
/// counterexample. Movers are printed 1-based.
pub fn render_sim_report(v: &SimVerdict) -> String {
    let mut out = String::new();
    if v.simulated {
        out.push_str("VERDICT: SIMULATED\n");
    } else {
        out.push_str("VERDICT: NOT-SIMULATED\n");
        if let Some(cx) = &v.counterexample {
            out.push_str("TRACE:");
            for (l, m) in &cx.steps {
                out.push_str(&format!(" {}@{}", l, m + 1));
            }
            out.push('\n');
            out.push_str(&format!("STUCK: {}\n", cx.stuck));
        }
    }
    out
}

/// Per-pair bookkeeping for the deletion fixpoint, in flat arrays: slot `k`
/// of pair `p` lives at `slot_offsets[p] + k` and carries the goal label
/// and the count of surviving product answers.
struct Game {
    /// Interned (goal state, global key) pairs in discovery order.
    pairs: IndexSet<(u32, u64), FxBuildHasher>,
    codec: GlobalCodec,
    slot_offsets: Vec<u32>,
    slot_labels: Vec<ActionLabel>,
    slot_counts: Vec<u32>,
    /// Reverse edges, CSR over the dying pair: (dependent pair, flat slot).
    pred_offsets: Vec<u32>,
    pred_data: Vec<(u32, u32)>,
    alive: Vec<bool>,
    killed_by: Vec<Option<ActionLabel>>,
    death_order: Vec<u32>,
}

impl Game {
    fn slots_of(&self, p: usize) -> std::ops::Range<usize> {
        self.slot_offsets[p] as usize..self.slot_offsets[p + 1] as usize
    }

    fn lex_least_dead_label(&self, p: usize) -> Option<ActionLabel> {
        self.slots_of(p)
            .filter(|&k| self.slot_counts[k] == 0)
            .map(|k| self.slot_labels[k])
            .min_by_key(|l| l.as_str())
    }
}

/// Dense lookup tables for the game exploration: only the goal's enabled
/// labels matter, indexed 0..L in name order.
struct DenseTables {
    /// Per goal state: (small label index, goal successor), name-sorted.
    goal_moves: Vec<Vec<(u16, StateId)>>,
    /// Per small label: the owning services, ascending.
    owners: Vec<Vec<u16>>,
    /// Per service, per small label: successor per local state.
    service_moves: Vec<Vec<Vec<Option<u32>>>>,
    labels: Vec<ActionLabel>,
}

fn build_tables(goal: &ServiceAutomaton, product: &ProductView) -> DenseTables {
    let mut labels: Vec<ActionLabel> = goal
        .transitions()
        .map(|(_, l, _)| l)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    labels.sort_by_key(|l| l.as_str());
    let index: std::collections::HashMap<ActionLabel, u16> = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, i as u16))
        .collect();

    let mut goal_moves: Vec<Vec<(u16, StateId)>> = vec![Vec::new(); goal.state_count()];
    for (s, l, t) in goal.transitions() {
        goal_moves[s].push((index[&l], t));
    }
    for moves in &mut goal_moves {
        moves.sort_unstable();
    }

    let owners: Vec<Vec<u16>> = labels
        .iter()
        .map(|&l| product.owners(l).iter().map(|&i| i as u16).collect())
        .collect();
    let service_moves: Vec<Vec<Vec<Option<u32>>>> = product
        .services()
        .iter()
        .map(|svc| {
            labels
                .iter()
                .map(|&l| {
                    (0..svc.state_count())
                        .map(|u| svc.successor(u, l).map(|v| v as u32))
                        .collect()
                })
                .collect()
        })
        .collect();
    DenseTables {
        goal_moves,
        owners,
        service_moves,
        labels,
    }
}

fn explore_game(
    goal: &ServiceAutomaton,
    product: &ProductView,
    pair_cap: usize,
) -> Result<Game, SimulationError> {
    let tables = build_tables(goal, product);
    let mut codec = GlobalCodec::new(product);
    let mut pairs: IndexSet<(u32, u64), FxBuildHasher> = IndexSet::default();
    let g0 = codec.encode(&product.initial());
    pairs.insert((goal.initial() as u32, g0));

    let mut slot_offsets: Vec<u32> = vec![0];
    let mut slot_labels: Vec<ActionLabel> = Vec::new();
    let mut slot_counts: Vec<u32> = Vec::new();
    // (dying pair, dependent pair, flat slot), flattened to CSR afterwards.
    let mut edges: Vec<(u32, u32, u32)> = Vec::new();

    let mut head = 0;
    while head < pairs.len() {
        let (s, gkey) = *pairs.get_index(head).expect("in range");
        let s = s as usize;
        for slot in 0..tables.goal_moves[s].len() {
            let (small, s2) = tables.goal_moves[s][slot];
            let flat_slot = slot_labels.len() as u32;
            let mut count = 0u32;
            for &svc in &tables.owners[small as usize] {
                let local = codec.component(gkey, svc as usize);
                let Some(next) = tables.service_moves[svc as usize][small as usize][local] else {
                    continue;
                };
                let g2 = codec.with_component(gkey, svc as usize, next as usize);
                let (pi, inserted) = pairs.insert_full((s2 as u32, g2));
                if inserted && pairs.len() > pair_cap {
                    return Err(SimulationError::CapExceeded {
                        cap: pair_cap,
                        reached: pairs.len(),
                    });
                }
                edges.push((pi as u32, head as u32, flat_slot));
                count += 1;
            }
            slot_labels.push(tables.labels[small as usize]);
            slot_counts.push(count);
        }
        slot_offsets.push(slot_labels.len() as u32);
        head += 1;
    }

    // Predecessor CSR keyed by the dying pair.
    let n = pairs.len();
    let mut pred_offsets = vec![0u32; n + 1];
    for &(dst, _, _) in &edges {
        pred_offsets[dst as usize + 1] += 1;
    }
    for i in 1..=n {
        pred_offsets[i] += pred_offsets[i - 1];
    }
    let mut pred_data = vec![(0u32, 0u32); edges.len()];
    let mut cursor = pred_offsets.clone();
    for &(dst, src, slot) in &edges {
        let at = cursor[dst as usize] as usize;
        pred_data[at] = (src, slot);
        cursor[dst as usize] += 1;
    }

    Ok(Game {
        pairs,
        codec,
        slot_offsets,
        slot_labels,
        slot_counts,
        pred_offsets,
        pred_data,
        alive: vec![true; n],
        killed_by: vec![None; n],
        death_order: vec![0; n],
    })
}

fn run_deletions(game: &mut Game) {
    let n = game.pairs.len();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut clock: u32 = 0;

    for p in 0..n {
        if let Some(l) = game.lex_least_dead_label(p) {
            game.alive[p] = false;
            game.killed_by[p] = Some(l);
            clock += 1;
            game.death_order[p] = clock;
            queue.push_back(p);
        }
    }
    while let Some(dead) = queue.pop_front() {
        let range = game.pred_offsets[dead] as usize..game.pred_offsets[dead + 1] as usize;
        for i in range {
            let (p, slot) = game.pred_data[i];
            let (p, slot) = (p as usize, slot as usize);
            if !game.alive[p] {
                continue;
            }
            game.slot_counts[slot] -= 1;
            if game.slot_counts[slot] == 0 {
                let l = game.lex_least_dead_label(p).expect("a slot just hit zero");
                game.alive[p] = false;
                game.killed_by[p] = Some(l);
                clock += 1;
                game.death_order[p] = clock;
                queue.push_back(p);
            }
        }
    }
}

/// Greatest simulation restricted to game-reachable pairs.
///
/// Starts from every pair reachable in the simulation game from the initial
/// pair and deletes pairs whose some enabled goal action has no surviving
/// product answer, to stabilization. The result is simulation-closed and
/// contains every simulation-closed set of reachable pairs.
pub fn largest_simulation<'a>(
    goal: &'a ServiceAutomaton,
    product: &'a ProductView,
    pair_cap: usize,
) -> Result<SimulationRelation<'a>, SimulationError> {
    let mut game = explore_game(goal, product, pair_cap)?;
    run_deletions(&mut game);
    let mut alive = FxHashSet::default();
    for (i, &(s, gkey)) in game.pairs.iter().enumerate() {
        if game.alive[i] {
            alive.insert((s, gkey));
        }
    }
    Ok(SimulationRelation {
        goal,
        product,
        codec: game.codec,
        alive,
    })
}

/// Decides `goal ⊑ product`; on failure extracts a counterexample by
/// replaying the deletion chain (each dead pair recorded the label that
/// killed it; ties broken by name-least label, then least mover index).
pub fn simulates(
    goal: &ServiceAutomaton,
    product: &ProductView,
    pair_cap: usize,
) -> Result<SimVerdict, SimulationError> {
    let mut game = explore_game(goal, product, pair_cap)?;
    run_deletions(&mut game);

    let root = 0usize;
    if game.alive[root] {
        return Ok(SimVerdict {
            simulated: true,
            counterexample: None,
        });
    }

    let mut steps: Vec<(ActionLabel, usize)> = Vec::new();
    let mut cur = root;
    let arity = product.len();
    let stuck = loop {
        let a = game.killed_by[cur].expect("dead pairs record their killer");
        let (s, gkey) = *game.pairs.get_index(cur).expect("in range");
        let g = game.codec.decode(gkey, arity);
        let succs = product.successors_unchecked(&g, a);
        if succs.is_empty() {
            break a;
        }
        // All a-successor pairs died earlier; descend along the least mover.
        let s2 = goal
            .successor(s as usize, a)
            .expect("killer labels are enabled");
        let (mover, g2) = succs.into_iter().next().expect("nonempty");
        let g2key = game.codec.lookup(&g2).expect("explored");
        let next = game
            .pairs
            .get_index_of(&(s2 as u32, g2key))
            .expect("explored in the game");
        debug_assert!(game.death_order[next] < game.death_order[cur]);
        steps.push((a, mover));
        cur = next;
    };

    let description = format!(
        "after {} steps the goal enables `{}` and the product cannot perform it",
        steps.len(),
        stuck
    );
    Ok(SimVerdict {
        simulated: false,
        counterexample: Some(Counterexample {
            steps,
            stuck,
            description,
        }),
    })
}

/// Reference fixpoint over the full pair space of an explicit product.
///
/// Deletes from all of `Q_goal x Q_nfa` until stable; quadratic and simple,
/// kept as the oracle the reachable-restricted checker is tested against.
pub fn largest_simulation_fullspace(
    goal: &ServiceAutomaton,
    explicit: &Nfa,
) -> HashSet<(StateId, StateId)> {
    let mut rel: HashSet<(StateId, StateId)> = HashSet::new();
    for s in 0..goal.state_count() {
        for q in 0..explicit.state_count() {
            rel.insert((s, q));
        }
    }
    loop {
        let mut to_delete: Vec<(StateId, StateId)> = Vec::new();
        for &(s, q) in &rel {
            for a in goal.enabled_actions(s).expect("in range") {
                let s2 = goal.successor(s, a).expect("enabled");
                let matched = explicit
                    .successors(q, a)
                    .iter()
                    .any(|&q2| rel.contains(&(s2, q2)));
                if !matched {
                    to_delete.push((s, q));
                    break;
                }
            }
        }
        if to_delete.is_empty() {
            return rel;
        }
        for p in to_delete {
            rel.remove(&p);
        }
    }
}

/// Decides `goal ⊑ A(i)` where `A(i)` keeps component `i` and replaces every
/// other component with a one-state automaton looping on its alphabet.
///
/// Both sides being deterministic, this is a joint reachability search over
/// (goal state, component-i state): a pair fails when the goal enables a
/// label owned by component `i` alone and disabled there. Labels of other
/// components advance the goal side only; labels shared between `i` and
/// another component can be absorbed by the looping automata, so both
/// readings are explored and only exclusively-owned labels block.
pub fn simulates_component(
    goal: &ServiceAutomaton,
    product: &ProductView,
    index: usize,
) -> Result<bool, SimulationError> {
    if index >= product.len() {
        return Err(SimulationError::IndexOutOfRange {
            index,
            len: product.len(),
        });
    }
    let svc = &product.services()[index];

    let mut seen: HashSet<(StateId, StateId)> = HashSet::new();
    let mut queue: VecDeque<(StateId, StateId)> = VecDeque::new();
    let start = (goal.initial(), svc.initial());
    seen.insert(start);
    queue.push_back(start);

    while let Some((s, u)) = queue.pop_front() {
        for a in goal.enabled_actions(s).expect("in range") {
            let s2 = goal.successor(s, a).expect("enabled");
            let owners = product.owners(a);
            let owned_here = owners.contains(&index);
            let owned_elsewhere = owners.iter().any(|&j| j != index);
            if !owned_here && !owned_elsewhere {
                // No component of A(i) can move on `a`.
                return Ok(false);
            }
            let mut moved = false;
            if owned_here {
                if let Some(u2) = svc.successor(u, a) {
                    moved = true;
                    if seen.insert((s2, u2)) {
                        queue.push_back((s2, u2));
                    }
                }
            }
            if owned_elsewhere {
                // Some looping automaton absorbs `a`; component i stays.
                if seen.insert((s2, u)) {
                    queue.push_back((s2, u));
                }
            } else if !moved {
                // `a` belongs to component i alone and is disabled at u.
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Polynomial decision of `goal ⊑ product` for pairwise disjoint component
/// alphabets: the conjunction of [`simulates_component`] over all components.
pub fn simulates_disjoint(
    goal: &ServiceAutomaton,
    product: &ProductView,
) -> Result<bool, SimulationError> {
    for &l in product.alphabet() {
        let owners = product.owners(l);
        if owners.len() > 1 {
            return Err(SimulationError::AlphabetsNotDisjoint {
                label: l.as_str().to_string(),
                first: owners[0],
                second: owners[1],
            });
        }
    }
    for i in 0..product.len() {
        if !simulates_component(goal, product, i)? {
            return Ok(false);
        }
    }
    Ok(true)
}
