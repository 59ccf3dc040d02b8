//! Service automata, NFAs, and the `.saut` text format.
//!
//! A [`ServiceAutomaton`] is a finite automaton with a *partial*
//! deterministic transition function: a missing `(state, label)` entry means
//! the action is disabled there, and a state with no outgoing transitions
//! blocks. An [`Nfa`] has the same shape with sets of successors; it is the
//! form taken by explicit asynchronous products.
//!
//! The `.saut` format is line based, `#` starts a comment:
//!
//! ```text
//! automaton vendor
//! states: s0 s1
//! alphabet: book pay
//! initial: s0
//! trans: s0 book -> s1
//! trans: s1 pay -> s0
//! ```
//!
//! NFA files use the same syntax and simply permit repeated
//! `(state, label)` lines. Serialization is canonical: states, alphabet and
//! transitions are emitted in declaration order, so `parse . serialize` is
//! the identity on parsed automata.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::labels::{valid_name, ActionLabel};

/// Index of a state within one automaton's declaration order.
pub type StateId = usize;

/// Transitions in declaration order.
type EdgeList = Vec<(StateId, ActionLabel, StateId)>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}: duplicate transition from `{state}` on `{label}` (automaton would be nondeterministic)")]
    DuplicateTransition {
        line: usize,
        state: String,
        label: String,
    },
    #[error("line {line}: unknown state `{name}`")]
    UnknownState { line: usize, name: String },
    #[error("line {line}: unknown label `{name}`")]
    UnknownLabel { line: usize, name: String },
    #[error("missing `initial:` line")]
    MissingInitial,
    #[error("line {line}: duplicate declaration of `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: invalid name `{name}`")]
    InvalidName { line: usize, name: String },
    #[error("missing `{0}:` section")]
    MissingSection(&'static str),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("unknown state index {0}")]
    UnknownState(StateId),
    #[error("duplicate state name `{0}`")]
    DuplicateState(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("transition uses undeclared state `{0}`")]
    UndeclaredState(String),
    #[error("transition uses undeclared label `{0}`")]
    UndeclaredLabel(String),
    #[error("duplicate transition from `{state}` on `{label}`")]
    Nondeterministic { state: String, label: String },
    #[error("no states declared")]
    Empty,
}

/// Common storage for both automaton kinds: interned alphabet, named states
/// in declaration order, and the transition list in declaration order.
#[derive(Clone, Debug)]
struct Core {
    name: String,
    states: Vec<String>,
    index: HashMap<String, StateId>,
    alphabet: Vec<ActionLabel>,
    alphabet_set: HashSet<ActionLabel>,
    initial: StateId,
    edges: Vec<(StateId, ActionLabel, StateId)>,
}

impl Core {
    fn to_saut(&self) -> String {
        let mut out = String::new();
        out.push_str("automaton ");
        out.push_str(&self.name);
        out.push('\n');
        out.push_str("states:");
        for s in &self.states {
            out.push(' ');
            out.push_str(s);
        }
        out.push('\n');
        out.push_str("alphabet:");
        for l in &self.alphabet {
            out.push(' ');
            out.push_str(l.as_str());
        }
        out.push('\n');
        out.push_str("initial: ");
        out.push_str(&self.states[self.initial]);
        out.push('\n');
        for &(src, label, dst) in &self.edges {
            out.push_str("trans: ");
            out.push_str(&self.states[src]);
            out.push(' ');
            out.push_str(label.as_str());
            out.push_str(" -> ");
            out.push_str(&self.states[dst]);
            out.push('\n');
        }
        out
    }
}

/// A deterministic finite automaton with a partial transition function.
#[derive(Clone, Debug)]
pub struct ServiceAutomaton {
    core: Core,
    delta: Vec<HashMap<ActionLabel, StateId>>,
}

/// A nondeterministic finite automaton; same shape with successor sets.
#[derive(Clone, Debug)]
pub struct Nfa {
    core: Core,
    delta: Vec<HashMap<ActionLabel, BTreeSet<StateId>>>,
}

/// Incremental construction of either automaton kind.
///
/// States and labels must be declared before transitions mention them;
/// declaration order becomes the canonical serialization order.
#[derive(Clone, Debug)]
pub struct AutomatonBuilder {
    name: String,
    states: Vec<String>,
    index: HashMap<String, StateId>,
    alphabet: Vec<ActionLabel>,
    alphabet_set: HashSet<ActionLabel>,
    initial: Option<StateId>,
    edges: Vec<(StateId, ActionLabel, StateId)>,
}

impl AutomatonBuilder {
    pub fn new(name: &str) -> Self {
        AutomatonBuilder {
            name: name.to_string(),
            states: Vec::new(),
            index: HashMap::new(),
            alphabet: Vec::new(),
            alphabet_set: HashSet::new(),
            initial: None,
            edges: Vec::new(),
        }
    }

    /// Declares a state, returning its id; redeclaration returns the id.
    pub fn state(&mut self, name: &str) -> StateId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.states.len();
        self.states.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    /// Declares an alphabet letter; redeclaration is a no-op.
    pub fn label(&mut self, label: ActionLabel) {
        if self.alphabet_set.insert(label) {
            self.alphabet.push(label);
        }
    }

    pub fn label_str(&mut self, name: &str) -> ActionLabel {
        let l = ActionLabel::new(name).expect("invalid label name");
        self.label(l);
        l
    }

    pub fn initial(&mut self, name: &str) {
        let id = self.state(name);
        self.initial = Some(id);
    }

    /// Adds a transition between already-declared states.
    pub fn trans(&mut self, src: &str, label: ActionLabel, dst: &str) {
        let s = *self.index.get(src).expect("undeclared source state");
        let d = *self.index.get(dst).expect("undeclared target state");
        assert!(self.alphabet_set.contains(&label), "undeclared label");
        self.edges.push((s, label, d));
    }

    pub fn trans_str(&mut self, src: &str, label: &str, dst: &str) {
        let l = ActionLabel::new(label).expect("invalid label name");
        assert!(self.alphabet_set.contains(&l), "undeclared label");
        self.trans(src, l, dst);
    }

    fn into_core(self) -> Result<(Core, EdgeList), AutomatonError> {
        if self.states.is_empty() {
            return Err(AutomatonError::Empty);
        }
        let initial = self.initial.ok_or(AutomatonError::Empty)?;
        let edges = self.edges.clone();
        Ok((
            Core {
                name: self.name,
                states: self.states,
                index: self.index,
                alphabet: self.alphabet,
                alphabet_set: self.alphabet_set,
                initial,
                edges: self.edges,
            },
            edges,
        ))
    }

    /// Finishes as a deterministic automaton; duplicate `(state, label)`
    /// pairs are rejected.
    pub fn build(self) -> Result<ServiceAutomaton, AutomatonError> {
        let (core, edges) = self.into_core()?;
        let mut delta: Vec<HashMap<ActionLabel, StateId>> = vec![HashMap::new(); core.states.len()];
        for (src, label, dst) in edges {
            if delta[src].insert(label, dst).is_some() {
                return Err(AutomatonError::Nondeterministic {
                    state: core.states[src].clone(),
                    label: label.as_str().to_string(),
                });
            }
        }
        Ok(ServiceAutomaton { core, delta })
    }

    /// Finishes as an NFA; duplicate `(state, label)` pairs accumulate.
    pub fn build_nfa(self) -> Result<Nfa, AutomatonError> {
        let (core, edges) = self.into_core()?;
        let mut delta: Vec<HashMap<ActionLabel, BTreeSet<StateId>>> =
            vec![HashMap::new(); core.states.len()];
        for (src, label, dst) in edges {
            delta[src].entry(label).or_default().insert(dst);
        }
        Ok(Nfa { core, delta })
    }
}

/// Parsed form of one `.saut` file before determinism is decided.
fn parse_core(text: &str) -> Result<AutomatonBuilder, ParseError> {
    let mut name: Option<String> = None;
    let mut states: Vec<(String, usize)> = Vec::new();
    let mut alphabet: Vec<(String, usize)> = Vec::new();
    let mut initial: Option<(String, usize)> = None;
    let mut trans: Vec<(String, String, String, usize)> = Vec::new();
    let mut seen_states_line = false;
    let mut seen_alphabet_line = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let col = |tok: &str| content.find(tok).map(|p| p + 1).unwrap_or(1);
        match tokens[0] {
            "automaton" => {
                if tokens.len() != 2 {
                    return Err(ParseError::Syntax {
                        line,
                        col: 1,
                        msg: "expected `automaton <name>`".into(),
                    });
                }
                if name.is_some() {
                    return Err(ParseError::Syntax {
                        line,
                        col: 1,
                        msg: "repeated `automaton` line".into(),
                    });
                }
                name = Some(tokens[1].to_string());
            }
            "states:" => {
                seen_states_line = true;
                for t in &tokens[1..] {
                    states.push((t.to_string(), line));
                }
            }
            "alphabet:" => {
                seen_alphabet_line = true;
                for t in &tokens[1..] {
                    alphabet.push((t.to_string(), line));
                }
            }
            "initial:" => {
                if tokens.len() != 2 {
                    return Err(ParseError::Syntax {
                        line,
                        col: 1,
                        msg: "expected `initial: <state>`".into(),
                    });
                }
                initial = Some((tokens[1].to_string(), line));
            }
            "trans:" => {
                if tokens.len() != 5 || tokens[3] != "->" {
                    return Err(ParseError::Syntax {
                        line,
                        col: 1,
                        msg: "expected `trans: <src> <label> -> <dst>`".into(),
                    });
                }
                trans.push((
                    tokens[1].to_string(),
                    tokens[2].to_string(),
                    tokens[4].to_string(),
                    line,
                ));
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    col: col(other),
                    msg: format!("unrecognized directive `{other}`"),
                });
            }
        }
    }

    let name = name.ok_or(ParseError::MissingSection("automaton"))?;
    if !seen_states_line {
        return Err(ParseError::MissingSection("states"));
    }
    if !seen_alphabet_line {
        return Err(ParseError::MissingSection("alphabet"));
    }

    let mut builder = AutomatonBuilder::new(&name);
    for (s, line) in &states {
        if !valid_name(s) {
            return Err(ParseError::InvalidName {
                line: *line,
                name: s.clone(),
            });
        }
        if builder.index.contains_key(s) {
            return Err(ParseError::DuplicateName {
                line: *line,
                name: s.clone(),
            });
        }
        builder.state(s);
    }
    for (l, line) in &alphabet {
        let label = ActionLabel::new(l).map_err(|_| ParseError::InvalidName {
            line: *line,
            name: l.clone(),
        })?;
        if builder.alphabet_set.contains(&label) {
            return Err(ParseError::DuplicateName {
                line: *line,
                name: l.clone(),
            });
        }
        builder.label(label);
    }
    let (init_name, init_line) = initial.ok_or(ParseError::MissingInitial)?;
    if !builder.index.contains_key(&init_name) {
        return Err(ParseError::UnknownState {
            line: init_line,
            name: init_name,
        });
    }
    builder.initial(&init_name);
    for (src, label, dst, line) in &trans {
        if !builder.index.contains_key(src) {
            return Err(ParseError::UnknownState {
                line: *line,
                name: src.clone(),
            });
        }
        if !builder.index.contains_key(dst) {
            return Err(ParseError::UnknownState {
                line: *line,
                name: dst.clone(),
            });
        }
        let l = ActionLabel::new(label).map_err(|_| ParseError::InvalidName {
            line: *line,
            name: label.clone(),
        })?;
        if !builder.alphabet_set.contains(&l) {
            return Err(ParseError::UnknownLabel {
                line: *line,
                name: label.clone(),
            });
        }
        builder.trans(src, l, dst);
    }
    Ok(builder)
}

/// Accessors shared by both automaton kinds.
macro_rules! core_accessors {
    () => {
        pub fn name(&self) -> &str {
            &self.core.name
        }

        pub fn state_count(&self) -> usize {
            self.core.states.len()
        }

        pub fn state_names(&self) -> &[String] {
            &self.core.states
        }

        pub fn state_name(&self, s: StateId) -> &str {
            &self.core.states[s]
        }

        pub fn state_id(&self, name: &str) -> Option<StateId> {
            self.core.index.get(name).copied()
        }

        pub fn alphabet(&self) -> &[ActionLabel] {
            &self.core.alphabet
        }

        pub fn has_label(&self, l: ActionLabel) -> bool {
            self.core.alphabet_set.contains(&l)
        }

        pub fn initial(&self) -> StateId {
            self.core.initial
        }

        /// Transitions in declaration order.
        pub fn transitions(&self) -> impl Iterator<Item = (StateId, ActionLabel, StateId)> + '_ {
            self.core.edges.iter().copied()
        }

        /// Canonical `.saut` rendering (declaration order throughout).
        pub fn to_saut(&self) -> String {
            self.core.to_saut()
        }
    };
}

impl ServiceAutomaton {
    core_accessors!();

    /// Parses a deterministic automaton from `.saut` text.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let builder = parse_core(text)?;
        match builder.build() {
            Ok(a) => Ok(a),
            Err(AutomatonError::Nondeterministic { state, label }) => {
                // Re-find the second occurrence for the line number.
                let mut line = 0;
                let mut count = 0;
                for (lineno, raw) in text.lines().enumerate() {
                    let content = match raw.find('#') {
                        Some(pos) => &raw[..pos],
                        None => raw,
                    };
                    let toks: Vec<&str> = content.split_whitespace().collect();
                    if toks.len() == 5
                        && toks[0] == "trans:"
                        && toks[1] == state
                        && toks[2] == label
                    {
                        count += 1;
                        if count == 2 {
                            line = lineno + 1;
                            break;
                        }
                    }
                }
                Err(ParseError::DuplicateTransition { line, state, label })
            }
            Err(_) => Err(ParseError::MissingInitial),
        }
    }

    /// The unique successor of `s` on `a`, if the action is enabled.
    pub fn successor(&self, s: StateId, a: ActionLabel) -> Option<StateId> {
        self.delta.get(s).and_then(|m| m.get(&a)).copied()
    }

    /// Labels with an outgoing transition at `s`.
    pub fn enabled_actions(&self, s: StateId) -> Result<BTreeSet<ActionLabel>, AutomatonError> {
        let m = self.delta.get(s).ok_or(AutomatonError::UnknownState(s))?;
        Ok(m.keys().copied().collect())
    }

    /// Runs an action word from a state; `Err(position)` on the first
    /// disabled action.
    pub fn run(&self, from: StateId, word: &[ActionLabel]) -> Result<StateId, usize> {
        let mut s = from;
        for (i, &a) in word.iter().enumerate() {
            s = self.successor(s, a).ok_or(i)?;
        }
        Ok(s)
    }

    /// View as an NFA with singleton successor sets.
    pub fn to_nfa(&self) -> Nfa {
        let mut delta: Vec<HashMap<ActionLabel, BTreeSet<StateId>>> =
            vec![HashMap::new(); self.core.states.len()];
        for (i, m) in self.delta.iter().enumerate() {
            for (&l, &d) in m {
                delta[i].entry(l).or_default().insert(d);
            }
        }
        Nfa {
            core: self.core.clone(),
            delta,
        }
    }

    /// Bisimulation quotient of the reachable part.
    ///
    /// Partition refinement on the signature `enabled label -> successor
    /// block`. Merged states are named `{m1+m2+...}` from their sorted member
    /// names; singleton blocks keep their original name, which makes the
    /// quotient a fixpoint on already-minimal automata.
    pub fn minimize_bisim(&self) -> ServiceAutomaton {
        // Reachable restriction first.
        let mut reach: Vec<StateId> = Vec::new();
        let mut seen = vec![false; self.state_count()];
        seen[self.initial()] = true;
        reach.push(self.initial());
        let mut head = 0;
        while head < reach.len() {
            let s = reach[head];
            head += 1;
            let mut nexts: Vec<StateId> = self.delta[s].values().copied().collect();
            nexts.sort_unstable();
            for d in nexts {
                if !seen[d] {
                    seen[d] = true;
                    reach.push(d);
                }
            }
        }

        // block[s] is meaningful only for reachable s.
        let mut block: Vec<usize> = vec![0; self.state_count()];
        let mut block_count = 1;
        loop {
            let mut sig_to_block: HashMap<(usize, Vec<(ActionLabel, usize)>), usize> =
                HashMap::new();
            let mut next_block = vec![0; self.state_count()];
            let mut next_count = 0;
            for &s in &reach {
                let mut sig: Vec<(ActionLabel, usize)> =
                    self.delta[s].iter().map(|(&l, &d)| (l, block[d])).collect();
                sig.sort_unstable();
                let key = (block[s], sig);
                let id = *sig_to_block.entry(key).or_insert_with(|| {
                    let id = next_count;
                    next_count += 1;
                    id
                });
                next_block[s] = id;
            }
            if next_count == block_count {
                block = next_block;
                break;
            }
            block = next_block;
            block_count = next_count;
        }

        // Name blocks; initial's block first, then by first member in
        // declaration order so the output is deterministic.
        let mut members: HashMap<usize, Vec<&str>> = HashMap::new();
        for &s in &reach {
            members
                .entry(block[s])
                .or_default()
                .push(self.state_name(s));
        }
        let mut block_order: Vec<usize> = members.keys().copied().collect();
        // First member in BFS discovery order represents its block.
        let first_member: HashMap<usize, StateId> = {
            let mut earliest: HashMap<usize, StateId> = HashMap::new();
            for &s in &reach {
                earliest.entry(block[s]).or_insert(s);
            }
            earliest
        };
        block_order.sort_by_key(|b| {
            (
                if *b == block[self.initial()] { 0 } else { 1 },
                first_member[b],
            )
        });

        let mut names: HashMap<usize, String> = HashMap::new();
        let mut used: HashSet<String> = HashSet::new();
        for &b in &block_order {
            let mut ms: Vec<&str> = members[&b].clone();
            ms.sort_unstable();
            let mut name = if ms.len() == 1 {
                ms[0].to_string()
            } else {
                format!("{{{}}}", ms.join("+"))
            };
            let mut k = 2;
            while !used.insert(name.clone()) {
                name = format!("{name}.{k}");
                k += 1;
            }
            names.insert(b, name);
        }

        let mut builder = AutomatonBuilder::new(self.name());
        for &b in &block_order {
            builder.state(&names[&b]);
        }
        for &l in self.alphabet() {
            builder.label(l);
        }
        builder.initial(&names[&block[self.initial()]]);
        let mut emitted: HashSet<(usize, ActionLabel)> = HashSet::new();
        for &b in &block_order {
            let rep = first_member[&b];
            let mut moves: Vec<(ActionLabel, StateId)> =
                self.delta[rep].iter().map(|(&l, &d)| (l, d)).collect();
            moves.sort_by_key(|(l, _)| l.as_str());
            for (l, d) in moves {
                if emitted.insert((b, l)) {
                    builder.trans(&names[&b], l, &names[&block[d]]);
                }
            }
        }
        builder
            .build()
            .expect("quotient of a deterministic automaton is deterministic")
    }

    /// True when the reachable parts are isomorphic with matching labels.
    pub fn is_isomorphic_to(&self, other: &ServiceAutomaton) -> bool {
        canonical_shape(self) == canonical_shape(other)
    }
}

/// Reachable part in canonical BFS order with name-sorted label expansion;
/// equal shapes mean label-preserving isomorphism of reachable parts.
fn canonical_shape(a: &ServiceAutomaton) -> Vec<Vec<(String, usize)>> {
    let mut order: HashMap<StateId, usize> = HashMap::new();
    let mut queue = vec![a.initial()];
    order.insert(a.initial(), 0);
    let mut shape: Vec<Vec<(String, usize)>> = Vec::new();
    let mut head = 0;
    while head < queue.len() {
        let s = queue[head];
        head += 1;
        let mut moves: Vec<(String, StateId)> = a.delta[s]
            .iter()
            .map(|(&l, &d)| (l.as_str().to_string(), d))
            .collect();
        moves.sort();
        let mut row = Vec::new();
        for (l, d) in moves {
            let id = *order.entry(d).or_insert_with(|| {
                queue.push(d);
                queue.len() - 1
            });
            row.push((l, id));
        }
        shape.push(row);
    }
    shape
}

impl Nfa {
    core_accessors!();

    /// Parses an NFA from `.saut` text; repeated `(state, label)` lines
    /// accumulate successors.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let builder = parse_core(text)?;
        builder.build_nfa().map_err(|_| ParseError::MissingInitial)
    }

    pub fn successors(&self, s: StateId, a: ActionLabel) -> &BTreeSet<StateId> {
        static EMPTY: once_cell::sync::Lazy<BTreeSet<StateId>> =
            once_cell::sync::Lazy::new(BTreeSet::new);
        self.delta.get(s).and_then(|m| m.get(&a)).unwrap_or(&EMPTY)
    }

    pub fn enabled_actions(&self, s: StateId) -> Result<BTreeSet<ActionLabel>, AutomatonError> {
        let m = self.delta.get(s).ok_or(AutomatonError::UnknownState(s))?;
        Ok(m.keys().copied().collect())
    }

    /// True when no `(state, label)` pair has two successors.
    pub fn is_deterministic(&self) -> bool {
        self.delta
            .iter()
            .all(|m| m.values().all(|set| set.len() <= 1))
    }
}

impl fmt::Display for ServiceAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_saut())
    }
}
