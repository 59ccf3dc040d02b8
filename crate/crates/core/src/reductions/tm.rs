//! Linear-space Turing machines, deterministic or alternating.
//!
//! Machines here never leave the input cells: a move that would cross either
//! tape end produces no successor, blocking that branch. Deterministic
//! machines have at most one move per (state, symbol); alternating machines
//! have none or exactly two ordered moves sharing a direction, with each
//! state marked existential or universal. The head moves on every step.
//!
//! The `.tm` format:
//!
//! ```text
//! tm flipper
//! kind: det
//! states: q0 q1
//! tape: a b
//! initial: q0
//! trans: q0 a -> q1 a R
//! trans: q1 a -> q0 a L
//! input: a a
//! ```
//!
//! Alternating machines add a `mode:` line (`mode: q0 exist q1 univ`) and
//! give two `trans:` lines per non-blocking (state, symbol), in order.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TmKind {
    Deterministic,
    Alternating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateMode {
    Existential,
    Universal,
}

/// One move: next state, written symbol, head direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TmMove {
    pub state: usize,
    pub write: usize,
    pub dir: Dir,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TmError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("machine `{0}` has no right-moving transition")]
    NoRightMove(String),
    #[error(
        "state `{state}` reading `{symbol}`: deterministic machines allow one move, got {got}"
    )]
    TooManyMoves {
        state: String,
        symbol: String,
        got: usize,
    },
    #[error("state `{state}` reading `{symbol}`: alternating machines need exactly two distinct moves, got {got}")]
    NotTwoMoves {
        state: String,
        symbol: String,
        got: usize,
    },
    #[error("state `{state}` reading `{symbol}`: the two moves must share a direction")]
    MixedDirections { state: String, symbol: String },
    #[error("alternating machine `{0}` must assign a mode to every state")]
    MissingMode(String),
    #[error("configuration space is {size} configurations, over the cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("input symbol `{0}` is not in the tape alphabet")]
    BadInputSymbol(String),
}

/// A linear-space Turing machine over named states and tape symbols.
#[derive(Clone, Debug)]
pub struct TuringMachine {
    name: String,
    kind: TmKind,
    states: Vec<String>,
    state_index: HashMap<String, usize>,
    tape: Vec<String>,
    tape_index: HashMap<String, usize>,
    modes: Vec<StateMode>,
    initial: usize,
    trans: HashMap<(usize, usize), Vec<TmMove>>,
}

/// A machine configuration: tape of fixed length, head cell (0-based), state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TmConfiguration {
    pub tape: Vec<usize>,
    pub head: usize,
    pub state: usize,
}

impl TuringMachine {
    /// Builds and validates a machine. `modes` is required for alternating
    /// machines and ignored for deterministic ones.
    pub fn new(
        name: &str,
        kind: TmKind,
        states: Vec<String>,
        tape: Vec<String>,
        modes: Vec<StateMode>,
        initial: usize,
        trans: HashMap<(usize, usize), Vec<TmMove>>,
    ) -> Result<Self, TmError> {
        let state_index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let tape_index = tape
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let modes = if kind == TmKind::Alternating {
            if modes.len() != states.len() {
                return Err(TmError::MissingMode(name.to_string()));
            }
            modes
        } else {
            vec![StateMode::Existential; states.len()]
        };
        let m = TuringMachine {
            name: name.to_string(),
            kind,
            states,
            state_index,
            tape,
            tape_index,
            modes,
            initial,
            trans,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), TmError> {
        let mut has_right = false;
        for (&(q, a), moves) in &self.trans {
            for mv in moves {
                if mv.dir == Dir::Right {
                    has_right = true;
                }
            }
            match self.kind {
                TmKind::Deterministic => {
                    if moves.len() > 1 {
                        return Err(TmError::TooManyMoves {
                            state: self.states[q].clone(),
                            symbol: self.tape[a].clone(),
                            got: moves.len(),
                        });
                    }
                }
                TmKind::Alternating => {
                    if moves.len() != 2 || moves[0] == moves[1] {
                        return Err(TmError::NotTwoMoves {
                            state: self.states[q].clone(),
                            symbol: self.tape[a].clone(),
                            got: moves.len(),
                        });
                    }
                    if moves[0].dir != moves[1].dir {
                        return Err(TmError::MixedDirections {
                            state: self.states[q].clone(),
                            symbol: self.tape[a].clone(),
                        });
                    }
                }
            }
        }
        if !has_right {
            return Err(TmError::NoRightMove(self.name.clone()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> TmKind {
        self.kind
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn tape(&self) -> &[String] {
        &self.tape
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn mode(&self, q: usize) -> StateMode {
        self.modes[q]
    }

    pub fn moves(&self, q: usize, a: usize) -> &[TmMove] {
        self.trans.get(&(q, a)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn transitions(&self) -> impl Iterator<Item = ((usize, usize), &[TmMove])> + '_ {
        self.trans.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn has_left_move(&self) -> bool {
        self.trans
            .values()
            .any(|ms| ms.iter().any(|m| m.dir == Dir::Left))
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.state_index.get(name).copied()
    }

    pub fn symbol_id(&self, name: &str) -> Option<usize> {
        self.tape_index.get(name).copied()
    }

    /// Converts an input word of symbol names to symbol ids.
    pub fn word(&self, symbols: &[&str]) -> Result<Vec<usize>, TmError> {
        symbols
            .iter()
            .map(|s| {
                self.symbol_id(s)
                    .ok_or_else(|| TmError::BadInputSymbol(s.to_string()))
            })
            .collect()
    }

    /// Initial configuration on `input`: initial state, head on cell 1.
    pub fn initial_configuration(&self, input: &[usize]) -> TmConfiguration {
        TmConfiguration {
            tape: input.to_vec(),
            head: 0,
            state: self.initial,
        }
    }

    /// Number of configurations of tape length `n`.
    pub fn configuration_space(&self, n: usize) -> Option<usize> {
        let cells = self.tape.len().checked_pow(u32::try_from(n).ok()?)?;
        self.states.len().checked_mul(n)?.checked_mul(cells)
    }

    /// Canonical `.tm` rendering including the input word.
    pub fn to_tm(&self, input: &[usize]) -> String {
        let mut out = format!("tm {}\n", self.name);
        out.push_str(&format!(
            "kind: {}\n",
            match self.kind {
                TmKind::Deterministic => "det",
                TmKind::Alternating => "alt",
            }
        ));
        out.push_str(&format!("states: {}\n", self.states.join(" ")));
        out.push_str(&format!("tape: {}\n", self.tape.join(" ")));
        if self.kind == TmKind::Alternating {
            out.push_str("mode:");
            for (q, m) in self.modes.iter().enumerate() {
                out.push_str(&format!(
                    " {} {}",
                    self.states[q],
                    match m {
                        StateMode::Existential => "exist",
                        StateMode::Universal => "univ",
                    }
                ));
            }
            out.push('\n');
        }
        out.push_str(&format!("initial: {}\n", self.states[self.initial]));
        let mut keys: Vec<(usize, usize)> = self.trans.keys().copied().collect();
        keys.sort_unstable();
        for (q, a) in keys {
            for mv in &self.trans[&(q, a)] {
                out.push_str(&format!(
                    "trans: {} {} -> {} {} {}\n",
                    self.states[q],
                    self.tape[a],
                    self.states[mv.state],
                    self.tape[mv.write],
                    match mv.dir {
                        Dir::Left => "L",
                        Dir::Right => "R",
                    }
                ));
            }
        }
        out.push_str("input:");
        for &s in input {
            out.push_str(&format!(" {}", self.tape[s]));
        }
        out.push('\n');
        out
    }
}

/// Parses a `.tm` file; returns the machine and the input word.
pub fn parse_tm(text: &str) -> Result<(TuringMachine, Vec<usize>), TmError> {
    let err = |line: usize, msg: &str| TmError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut name: Option<String> = None;
    let mut kind: Option<TmKind> = None;
    let mut states: Vec<String> = Vec::new();
    let mut tape: Vec<String> = Vec::new();
    let mut mode_tokens: Vec<(String, String, usize)> = Vec::new();
    let mut initial: Option<(String, usize)> = None;
    let mut trans_lines: Vec<(Vec<String>, usize)> = Vec::new();
    let mut input_names: Option<(Vec<String>, usize)> = None;

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
        match tokens[0] {
            "tm" => {
                if tokens.len() != 2 {
                    return Err(err(line, "expected `tm <name>`"));
                }
                name = Some(tokens[1].to_string());
            }
            "kind:" => {
                kind = Some(match tokens.get(1).copied() {
                    Some("det") => TmKind::Deterministic,
                    Some("alt") => TmKind::Alternating,
                    _ => return Err(err(line, "expected `kind: det` or `kind: alt`")),
                });
            }
            "states:" => states.extend(tokens[1..].iter().map(|s| s.to_string())),
            "tape:" => tape.extend(tokens[1..].iter().map(|s| s.to_string())),
            "mode:" => {
                if !(tokens.len() - 1).is_multiple_of(2) {
                    return Err(err(line, "expected `mode: <state> exist|univ` pairs"));
                }
                for pair in tokens[1..].chunks(2) {
                    mode_tokens.push((pair[0].to_string(), pair[1].to_string(), line));
                }
            }
            "initial:" => {
                if tokens.len() != 2 {
                    return Err(err(line, "expected `initial: <state>`"));
                }
                initial = Some((tokens[1].to_string(), line));
            }
            "trans:" => {
                if tokens.len() != 7 || tokens[3] != "->" {
                    return Err(err(
                        line,
                        "expected `trans: <state> <sym> -> <state> <sym> L|R`",
                    ));
                }
                trans_lines.push((tokens[1..].iter().map(|s| s.to_string()).collect(), line));
            }
            "input:" => {
                input_names = Some((tokens[1..].iter().map(|s| s.to_string()).collect(), line));
            }
            other => return Err(err(line, &format!("unrecognized directive `{other}`"))),
        }
    }

    let name = name.ok_or_else(|| err(0, "missing `tm <name>` line"))?;
    let kind = kind.ok_or_else(|| err(0, "missing `kind:` line"))?;
    if states.is_empty() {
        return Err(err(0, "missing `states:` line"));
    }
    if tape.is_empty() {
        return Err(err(0, "missing `tape:` line"));
    }
    let state_index: HashMap<&str, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let tape_index: HashMap<&str, usize> = tape
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let mut modes = vec![None; states.len()];
    for (state, mode, line) in &mode_tokens {
        let q = *state_index
            .get(state.as_str())
            .ok_or_else(|| err(*line, &format!("unknown state `{state}`")))?;
        modes[q] = Some(match mode.as_str() {
            "exist" => StateMode::Existential,
            "univ" => StateMode::Universal,
            other => return Err(err(*line, &format!("unknown mode `{other}`"))),
        });
    }
    if kind == TmKind::Deterministic && !mode_tokens.is_empty() {
        return Err(err(
            mode_tokens[0].2,
            "`mode:` is only for alternating machines",
        ));
    }
    let modes: Vec<StateMode> = if kind == TmKind::Alternating {
        let mut out = Vec::with_capacity(states.len());
        for (q, m) in modes.into_iter().enumerate() {
            out.push(m.ok_or_else(|| err(0, &format!("state `{}` has no mode", states[q])))?);
        }
        out
    } else {
        Vec::new()
    };

    let (init_name, init_line) = initial.ok_or_else(|| err(0, "missing `initial:` line"))?;
    let initial = *state_index
        .get(init_name.as_str())
        .ok_or_else(|| err(init_line, &format!("unknown state `{init_name}`")))?;

    let mut trans: HashMap<(usize, usize), Vec<TmMove>> = HashMap::new();
    for (toks, line) in &trans_lines {
        let q = *state_index
            .get(toks[0].as_str())
            .ok_or_else(|| err(*line, &format!("unknown state `{}`", toks[0])))?;
        let a = *tape_index
            .get(toks[1].as_str())
            .ok_or_else(|| err(*line, &format!("unknown symbol `{}`", toks[1])))?;
        let q2 = *state_index
            .get(toks[3].as_str())
            .ok_or_else(|| err(*line, &format!("unknown state `{}`", toks[3])))?;
        let b = *tape_index
            .get(toks[4].as_str())
            .ok_or_else(|| err(*line, &format!("unknown symbol `{}`", toks[4])))?;
        let dir = match toks[5].as_str() {
            "R" | "r" => Dir::Right,
            "L" | "l" => Dir::Left,
            other => return Err(err(*line, &format!("bad direction `{other}`"))),
        };
        trans.entry((q, a)).or_default().push(TmMove {
            state: q2,
            write: b,
            dir,
        });
    }

    let machine = TuringMachine::new(&name, kind, states, tape, modes, initial, trans)?;
    let (input_names, input_line) = input_names.ok_or_else(|| err(0, "missing `input:` line"))?;
    let input = input_names
        .iter()
        .map(|s| {
            machine
                .symbol_id(s)
                .ok_or_else(|| err(input_line, &format!("unknown input symbol `{s}`")))
        })
        .collect::<Result<Vec<usize>, _>>()?;
    Ok((machine, input))
}

/// Successor configurations: one per applicable move. A move crossing either
/// tape end is dropped; since alternating moves share a direction, this
/// yields 0, 1 or 2 successors as the invariants demand.
pub fn tm_successors(m: &TuringMachine, c: &TmConfiguration) -> Vec<TmConfiguration> {
    let n = c.tape.len();
    let mut out = Vec::new();
    for mv in m.moves(c.state, c.tape[c.head]) {
        let head = match mv.dir {
            Dir::Right if c.head + 1 < n => c.head + 1,
            Dir::Left if c.head > 0 => c.head - 1,
            _ => continue,
        };
        let mut tape = c.tape.clone();
        tape[c.head] = mv.write;
        out.push(TmConfiguration {
            tape,
            head,
            state: mv.state,
        });
    }
    out
}

/// True when the configuration has moves defined but every one of them
/// would cross a tape end.
pub fn boundary_exit(m: &TuringMachine, c: &TmConfiguration) -> bool {
    !m.moves(c.state, c.tape[c.head]).is_empty() && tm_successors(m, c).is_empty()
}

/// How the unique run of a deterministic machine ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    /// A configuration repeats: the computation is infinite.
    Loops,
    /// No transition on the reached (state, symbol); `head` is 0-based.
    HaltsBlocked { head: usize },
    /// A transition exists but would leave the tape.
    HaltsAtBoundary { head: usize },
}

/// Runs the unique computation of a deterministic machine to its end,
/// bounded by the configuration count.
pub fn tm_run_outcome(
    m: &TuringMachine,
    input: &[usize],
    cap: usize,
) -> Result<RunOutcome, TmError> {
    assert_eq!(
        m.kind(),
        TmKind::Deterministic,
        "run outcomes are for deterministic machines"
    );
    match m.configuration_space(input.len()) {
        Some(size) if size <= cap => {}
        Some(size) => return Err(TmError::CapExceeded { size, cap }),
        None => {
            return Err(TmError::CapExceeded {
                size: usize::MAX,
                cap,
            })
        }
    }
    let mut seen: HashSet<TmConfiguration> = HashSet::new();
    let mut c = m.initial_configuration(input);
    loop {
        if !seen.insert(c.clone()) {
            return Ok(RunOutcome::Loops);
        }
        let succ = tm_successors(m, &c);
        match succ.into_iter().next() {
            Some(next) => c = next,
            None => {
                return Ok(if boundary_exit(m, &c) {
                    RunOutcome::HaltsAtBoundary { head: c.head }
                } else {
                    RunOutcome::HaltsBlocked { head: c.head }
                });
            }
        }
    }
}

/// True iff the unique computation of a deterministic machine on `input`
/// is infinite.
pub fn tm_loops(m: &TuringMachine, input: &[usize], cap: usize) -> Result<bool, TmError> {
    Ok(matches!(tm_run_outcome(m, input, cap)?, RunOutcome::Loops))
}

/// Reachable configurations of an alternating machine on `input`, BFS order.
pub fn atm_reachable_configs(
    m: &TuringMachine,
    input: &[usize],
    cap: usize,
) -> Result<Vec<TmConfiguration>, TmError> {
    let size = m
        .configuration_space(input.len())
        .ok_or(TmError::CapExceeded {
            size: usize::MAX,
            cap,
        })?;
    if size > cap {
        return Err(TmError::CapExceeded { size, cap });
    }
    let mut order = vec![m.initial_configuration(input)];
    let mut seen: HashSet<TmConfiguration> = order.iter().cloned().collect();
    let mut head = 0;
    while head < order.len() {
        let c = order[head].clone();
        head += 1;
        for next in tm_successors(m, &c) {
            if seen.insert(next.clone()) {
                order.push(next);
            }
        }
    }
    Ok(order)
}

/// True iff the alternating machine has an infinite computation on `input`:
/// existential choices can keep every universal continuation unblocked
/// forever.
///
/// Computed as a safety game on the reachable configuration graph: the
/// attractor of the blocking configurations is grown backwards (universal
/// configurations join when one successor is attracted, existential ones
/// when all are), and the machine wins iff the initial configuration stays
/// outside.
pub fn atm_has_infinite_computation(
    m: &TuringMachine,
    input: &[usize],
    cap: usize,
) -> Result<bool, TmError> {
    assert_eq!(
        m.kind(),
        TmKind::Alternating,
        "the game semantics is for alternating machines"
    );
    let configs = atm_reachable_configs(m, input, cap)?;
    let index: HashMap<&TmConfiguration, usize> =
        configs.iter().enumerate().map(|(i, c)| (c, i)).collect();

    let mut succs: Vec<Vec<usize>> = Vec::with_capacity(configs.len());
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); configs.len()];
    for (i, c) in configs.iter().enumerate() {
        let ss: Vec<usize> = tm_successors(m, c)
            .iter()
            .map(|s| {
                *index
                    .get(s)
                    .expect("successors of reachable configs are reachable")
            })
            .collect();
        for &s in &ss {
            preds[s].push(i);
        }
        succs.push(ss);
    }

    let mut attracted = vec![false; configs.len()];
    let mut pending: Vec<usize> = succs
        .iter()
        .map(|ss| if ss.is_empty() { 0 } else { ss.len() })
        .collect();
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, ss) in succs.iter().enumerate() {
        if ss.is_empty() {
            attracted[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &p in &preds[i] {
            if attracted[p] {
                continue;
            }
            let join = match m.mode(configs[p].state) {
                // The environment picks the move: one attracted successor
                // suffices.
                StateMode::Universal => true,
                // The machine picks: attracted only when every choice is.
                StateMode::Existential => {
                    pending[p] -= 1;
                    pending[p] == 0
                }
            };
            if join {
                attracted[p] = true;
                queue.push_back(p);
            }
        }
    }
    Ok(!attracted[0])
}
