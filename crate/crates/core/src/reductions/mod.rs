//! Turing-machine encodings that produce hard composition instances.
//!
//! Each encoder turns a linear-space machine and an input word into a
//! [`ReductionInstance`]: services, a goal automaton, and provenance. The
//! goal is simulated by the asynchronous product of the services exactly
//! when the machine computes forever — the unique run is infinite for
//! deterministic machines ([`tm_loops`]), or an infinite alternating
//! computation exists ([`atm_has_infinite_computation`]). Those machine-side
//! deciders are the independent ground truth the simulation checker is
//! measured against.
//!
//! [`const_alphabet_transform`] re-encodes any instance over a fixed base
//! alphabet plus separators `hash`/`dollar`, preserving the verdict.

mod const_alphabet;
mod exptime;
mod pspace;
mod stepping;
mod tm;

pub use const_alphabet::{const_alphabet_conflicts, const_alphabet_transform};
pub use exptime::exptime_encode;
pub use pspace::pspace_encode;
pub use stepping::{
    verify_exptime_stepping, verify_pspace_stepping, SteppingError, SteppingReport,
};
pub use tm::{
    atm_has_infinite_computation, atm_reachable_configs, boundary_exit, parse_tm, tm_loops,
    tm_run_outcome, tm_successors, Dir, RunOutcome, StateMode, TmConfiguration, TmError, TmKind,
    TmMove, TuringMachine,
};

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::automata::{ParseError, ServiceAutomaton};
use crate::product::{GlobalState, ProductError, ProductView};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("this encoding needs a {expected} machine")]
    WrongKind { expected: &'static str },
    #[error("input word must have length at least 2, got {0}")]
    InputTooShort(usize),
    #[error(
        "machine name `{0}` cannot be used by the encoder (names must be dot-free and not `top`)"
    )]
    ReservedName(String),
    #[error("constant-alphabet base needs at least 2 distinct letters")]
    BaseTooSmall,
    #[error("base letter `{0}` is invalid or reserved")]
    BadBaseLetter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncodingKind {
    Pspace,
    Exptime,
}

impl EncodingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EncodingKind::Pspace => "pspace",
            EncodingKind::Exptime => "exptime",
        }
    }
}

/// Provenance of a generated instance.
#[derive(Clone, Debug)]
pub struct InstanceMeta {
    pub name: String,
    pub kind: EncodingKind,
    pub tm_name: String,
    /// Input word, symbol names.
    pub input: Vec<String>,
    /// Expected verdict: is the goal simulated by the product?
    pub oracle: Option<bool>,
    /// Base letters when the constant-alphabet transform was applied.
    pub const_alphabet: Option<Vec<String>>,
    /// Constant-alphabet enumeration: original label -> (letter, index).
    pub label_table: Vec<(String, String, usize)>,
}

/// Services (in product order), goal, and provenance.
#[derive(Clone, Debug)]
pub struct ReductionInstance {
    pub services: Vec<ServiceAutomaton>,
    pub goal: ServiceAutomaton,
    pub meta: InstanceMeta,
}

impl ReductionInstance {
    pub fn product(&self) -> ProductView {
        ProductView::new(self.services.clone()).expect("instances have at least one service")
    }

    /// A global state is proper when no component sits in its `top` state.
    pub fn is_proper(&self, g: &GlobalState) -> bool {
        g.components()
            .iter()
            .zip(&self.services)
            .all(|(&s, svc)| svc.state_name(s) != "top")
    }

    /// Writes `<service>.saut` files, `B.saut` and a `meta` manifest into
    /// `dir` (created if missing). Services are listed in product order.
    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = format!("instance {}\n", self.meta.name);
        manifest.push_str(&format!("kind: {}\n", self.meta.kind.as_str()));
        if let Some(base) = &self.meta.const_alphabet {
            manifest.push_str(&format!("const-alphabet: {}\n", base.join(" ")));
        }
        manifest.push_str(&format!("tm: {}\n", self.meta.tm_name));
        manifest.push_str(&format!("input: {}\n", self.meta.input.join(" ")));
        if let Some(oracle) = self.meta.oracle {
            manifest.push_str(&format!(
                "oracle: {}\n",
                if oracle { "SIMULATED" } else { "NOT-SIMULATED" }
            ));
        }
        for svc in &self.services {
            let file = format!("{}.saut", svc.name());
            fs::write(dir.join(&file), svc.to_saut())?;
            manifest.push_str(&format!("service: {file}\n"));
        }
        fs::write(dir.join("B.saut"), self.goal.to_saut())?;
        manifest.push_str("goal: B.saut\n");
        for (orig, letter, index) in &self.meta.label_table {
            manifest.push_str(&format!("label: {orig} -> {letter} {index}\n"));
        }
        fs::write(dir.join("meta"), manifest)
    }

    /// Reads an instance back from a directory written by [`write_dir`].
    ///
    /// [`write_dir`]: ReductionInstance::write_dir
    pub fn read_dir(dir: &Path) -> Result<ReductionInstance, InstanceIoError> {
        let manifest_path = dir.join("meta");
        let text = fs::read_to_string(&manifest_path)?;
        let mut name = None;
        let mut kind = None;
        let mut tm_name = None;
        let mut input = Vec::new();
        let mut oracle = None;
        let mut const_alphabet = None;
        let mut service_files = Vec::new();
        let mut goal_file = None;
        let mut label_table = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            if tokens.is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            match tokens[0] {
                "instance" => name = Some(tokens[1..].join(" ")),
                "kind:" => {
                    kind = Some(match tokens.get(1).copied() {
                        Some("pspace") => EncodingKind::Pspace,
                        Some("exptime") => EncodingKind::Exptime,
                        other => {
                            return Err(InstanceIoError::Manifest {
                                line,
                                msg: format!("unknown kind {other:?}"),
                            })
                        }
                    });
                }
                "const-alphabet:" => {
                    const_alphabet = Some(tokens[1..].iter().map(|s| s.to_string()).collect());
                }
                "tm:" => tm_name = Some(tokens[1..].join(" ")),
                "input:" => input = tokens[1..].iter().map(|s| s.to_string()).collect(),
                "oracle:" => {
                    oracle = Some(match tokens.get(1).copied() {
                        Some("SIMULATED") => true,
                        Some("NOT-SIMULATED") => false,
                        other => {
                            return Err(InstanceIoError::Manifest {
                                line,
                                msg: format!("unknown oracle verdict {other:?}"),
                            })
                        }
                    });
                }
                "service:" => service_files.push(tokens[1..].join(" ")),
                "goal:" => goal_file = Some(tokens[1..].join(" ")),
                "label:" => {
                    if tokens.len() == 6 && tokens[2] == "->" {
                        if let Ok(index) = tokens[4].parse() {
                            label_table.push((tokens[1].to_string(), tokens[3].to_string(), index));
                            continue;
                        }
                    }
                    return Err(InstanceIoError::Manifest {
                        line,
                        msg: "expected `label: <orig> -> <letter> <index>`".into(),
                    });
                }
                other => {
                    return Err(InstanceIoError::Manifest {
                        line,
                        msg: format!("unknown directive `{other}`"),
                    })
                }
            }
        }
        let missing = |what: &str| InstanceIoError::Manifest {
            line: 0,
            msg: format!("missing `{what}` line"),
        };
        let mut services = Vec::new();
        for file in &service_files {
            let text = fs::read_to_string(dir.join(file))?;
            services.push(ServiceAutomaton::parse(&text).map_err(|e| {
                InstanceIoError::Automaton {
                    file: file.clone(),
                    source: e,
                }
            })?);
        }
        let goal_file = goal_file.ok_or_else(|| missing("goal:"))?;
        let goal_text = fs::read_to_string(dir.join(&goal_file))?;
        let goal = ServiceAutomaton::parse(&goal_text).map_err(|e| InstanceIoError::Automaton {
            file: goal_file.clone(),
            source: e,
        })?;
        if services.is_empty() {
            return Err(missing("service:"));
        }
        Ok(ReductionInstance {
            services,
            goal,
            meta: InstanceMeta {
                name: name.ok_or_else(|| missing("instance"))?,
                kind: kind.ok_or_else(|| missing("kind:"))?,
                tm_name: tm_name.ok_or_else(|| missing("tm:"))?,
                input,
                oracle,
                const_alphabet,
                label_table,
            },
        })
    }
}

#[derive(Debug, Error)]
pub enum InstanceIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("{file}: {source}")]
    Automaton { file: String, source: ParseError },
    #[error(transparent)]
    Product(#[from] ProductError),
}

/// Encoder-side name check: TM state and symbol names become parts of dotted
/// minted names, so they must be dot-free and must not shadow `top`.
fn check_tm_names(m: &TuringMachine) -> Result<(), EncodeError> {
    for name in m.states().iter().chain(m.tape()) {
        if name.contains('.') || name == "top" {
            return Err(EncodeError::ReservedName(name.clone()));
        }
    }
    Ok(())
}

/// `{q}.{a}.{i}` for the state-arrival letter at cell `i` (1-based).
fn lbl_state(q: &str, a: &str, i: usize) -> String {
    format!("{q}.{a}.{i}")
}

/// `{q}.{b}.{i}.{d}` for a move letter, `d` rendered `l`/`r`.
fn lbl_move(q: &str, b: &str, i: usize, d: Dir) -> String {
    format!("{q}.{b}.{i}.{}", if d == Dir::Right { "r" } else { "l" })
}

/// `{q}.{b}.{i}.{d}.{copy}` for the two-copy move letters.
fn lbl_move_copy(q: &str, b: &str, i: usize, d: Dir, copy: usize) -> String {
    format!("{}.{copy}", lbl_move(q, b, i, d))
}

/// Move shapes `(state, symbol)` per direction, deduplicated and ordered.
fn move_shapes(m: &TuringMachine, dir: Dir, mode: Option<StateMode>) -> Vec<(usize, usize)> {
    let mut shapes: Vec<(usize, usize)> = Vec::new();
    let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
    let mut keys: Vec<(usize, usize)> = m.transitions().map(|(k, _)| k).collect();
    keys.sort_unstable();
    for (q, a) in keys {
        if let Some(wanted) = mode {
            if m.mode(q) != wanted {
                continue;
            }
        }
        for mv in m.moves(q, a) {
            if mv.dir == dir && seen.insert((mv.state, mv.write), ()).is_none() {
                shapes.push((mv.state, mv.write));
            }
        }
    }
    shapes
}
