//! Delegators: positional policies implementing a simulation relation.
//!
//! A delegator answers "which service performs this action" for every
//! relation pair and enabled goal action, choosing moves that stay inside
//! the relation. Following the policy therefore never blocks on any trace
//! the goal can execute.

use std::collections::HashMap;

use indexmap::IndexSet;
use thiserror::Error;

use crate::automata::{ServiceAutomaton, StateId};
use crate::labels::ActionLabel;
use crate::product::{GlobalState, ProductView};
use crate::simulation::SimulationRelation;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DelegatorError {
    #[error("composition unsolvable: the initial pair is not in the simulation relation")]
    Unsolvable,
    #[error("trace not executable in the goal at position {position}")]
    TraceNotExecutable { position: usize },
    #[error("line {line}: malformed delegator entry: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: unknown {what} `{name}`")]
    Unknown {
        line: usize,
        what: &'static str,
        name: String,
    },
}

/// A mover policy over (goal state, global state, action).
pub struct Delegator<'a> {
    goal: &'a ServiceAutomaton,
    product: &'a ProductView,
    globals: IndexSet<GlobalState>,
    policy: HashMap<(StateId, u32, ActionLabel), usize>,
}

/// Extracts a delegator from a winning simulation relation.
///
/// For every pair in the relation and every goal-enabled action, the least
/// service index whose move lands back in the relation is chosen, so the
/// output is a pure function of the relation.
pub fn synthesize<'a>(rel: &SimulationRelation<'a>) -> Result<Delegator<'a>, DelegatorError> {
    if !rel.contains_initial() {
        return Err(DelegatorError::Unsolvable);
    }
    let goal = rel.goal();
    let product = rel.product();
    let mut globals: IndexSet<GlobalState> = IndexSet::new();
    let mut policy = HashMap::new();
    for (s, g) in rel.iter() {
        let (gi, _) = globals.insert_full(g.clone());
        for a in goal.enabled_actions(s).expect("state in range") {
            let s2 = goal.successor(s, a).expect("enabled");
            let mover = product
                .successors_unchecked(&g, a)
                .into_iter()
                .find(|(_, g2)| rel.contains(s2, g2))
                .map(|(i, _)| i)
                .expect("simulation-closed relations always have a preserving move");
            policy.insert((s, gi as u32, a), mover);
        }
    }
    Ok(Delegator {
        goal,
        product,
        globals,
        policy,
    })
}

impl<'a> Delegator<'a> {
    /// The service assigned to `(s, g, a)`, if the triple is in the domain.
    pub fn mover(&self, s: StateId, g: &GlobalState, a: ActionLabel) -> Option<usize> {
        let gi = self.globals.get_index_of(g)?;
        self.policy.get(&(s, gi as u32, a)).copied()
    }

    pub fn len(&self) -> usize {
        self.policy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policy.is_empty()
    }

    /// Entries as (goal state, global state, action, mover).
    pub fn entries(
        &self,
    ) -> impl Iterator<Item = (StateId, &GlobalState, ActionLabel, usize)> + '_ {
        self.policy.iter().map(|(&(s, gi, a), &m)| {
            (
                s,
                self.globals.get_index(gi as usize).expect("interned"),
                a,
                m,
            )
        })
    }

    /// Executes a goal trace through the policy, returning the mover and the
    /// global state after each step.
    ///
    /// Never blocks on a trace executable in the goal: the policy's moves
    /// stay inside the relation, whose pairs answer every enabled action.
    pub fn replay(
        &self,
        trace: &[ActionLabel],
    ) -> Result<Vec<(usize, GlobalState)>, DelegatorError> {
        let mut s = self.goal.initial();
        let mut g = self.product.initial();
        let mut out = Vec::with_capacity(trace.len());
        for (position, &a) in trace.iter().enumerate() {
            let s2 = self
                .goal
                .successor(s, a)
                .ok_or(DelegatorError::TraceNotExecutable { position })?;
            let mover = self
                .mover(s, &g, a)
                .expect("executable traces stay inside the policy domain");
            let next_local = self.product.services()[mover]
                .successor(g.components()[mover], a)
                .expect("policy movers are enabled");
            g = g.with_component(mover, next_local);
            s = s2;
            out.push((mover, g.clone()));
        }
        Ok(out)
    }

    /// Serialization: one `deleg:` line per policy entry,
    /// `deleg: <goal-state> <t1|...|tn> <label> -> <service>` with 1-based
    /// service numbers, sorted for reproducibility.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<String> = self
            .entries()
            .map(|(s, g, a, m)| {
                format!(
                    "deleg: {} {} {} -> {}",
                    self.goal.state_name(s),
                    self.product.state_name(g),
                    a,
                    m + 1
                )
            })
            .collect();
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// Parses the `deleg:` line format back against a goal and product.
    pub fn parse(
        text: &str,
        goal: &'a ServiceAutomaton,
        product: &'a ProductView,
    ) -> Result<Delegator<'a>, DelegatorError> {
        let mut globals: IndexSet<GlobalState> = IndexSet::new();
        let mut policy = HashMap::new();
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
            if tokens.len() != 6 || tokens[0] != "deleg:" || tokens[4] != "->" {
                return Err(DelegatorError::Malformed {
                    line,
                    msg: "expected `deleg: <state> <global> <label> -> <service>`".into(),
                });
            }
            let s = goal.state_id(tokens[1]).ok_or(DelegatorError::Unknown {
                line,
                what: "goal state",
                name: tokens[1].to_string(),
            })?;
            let g = parse_global(tokens[2], product).ok_or(DelegatorError::Unknown {
                line,
                what: "global state",
                name: tokens[2].to_string(),
            })?;
            let a = ActionLabel::new(tokens[3]).map_err(|_| DelegatorError::Unknown {
                line,
                what: "label",
                name: tokens[3].to_string(),
            })?;
            let mover: usize = tokens[5]
                .parse::<usize>()
                .ok()
                .and_then(|m| m.checked_sub(1))
                .filter(|&m| m < product.len())
                .ok_or(DelegatorError::Malformed {
                    line,
                    msg: format!("bad service number `{}`", tokens[5]),
                })?;
            let (gi, _) = globals.insert_full(g);
            policy.insert((s, gi as u32, a), mover);
        }
        Ok(Delegator {
            goal,
            product,
            globals,
            policy,
        })
    }
}

fn parse_global(text: &str, product: &ProductView) -> Option<GlobalState> {
    let inner = text.strip_prefix('(')?.strip_suffix(')')?;
    let parts: Vec<&str> = inner.split('|').collect();
    if parts.len() != product.len() {
        return None;
    }
    let mut components = Vec::with_capacity(parts.len());
    for (part, svc) in parts.iter().zip(product.services()) {
        components.push(svc.state_id(part)?);
    }
    Some(GlobalState(components.into_boxed_slice()))
}
