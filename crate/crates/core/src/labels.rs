//! Interned action labels.
//!
//! Labels are the letters services synchronize on *by name*: two automata
//! parsed from different files share a letter exactly when the spelled names
//! are equal. Interning makes labels `Copy` and makes cross-automaton
//! equality a word comparison done once.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use once_cell::sync::Lazy;
use thiserror::Error;

/// Characters permitted in label and state names.
pub const NAME_CHARS: &str =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_.+(){}|,'-";

/// Returns true when `name` is a valid label or state name.
pub fn valid_name(name: &str) -> bool {
    !name.is_empty() && name != "->" && name.chars().all(|c| NAME_CHARS.contains(c))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("invalid name {0:?}: names are non-empty words over [A-Za-z0-9_.+(){{}}|,'-] and `->` is reserved")]
    InvalidName(String),
}

struct Interner {
    by_name: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

static INTERNER: Lazy<Mutex<Interner>> = Lazy::new(|| {
    Mutex::new(Interner {
        by_name: HashMap::new(),
        names: Vec::new(),
    })
});

/// An action letter, interned process-wide.
///
/// Equality, hashing and ordering go through the intern id; the id order is
/// interning order, not lexicographic. Use [`ActionLabel::as_str`] when a
/// name ordering is needed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionLabel(u32);

impl ActionLabel {
    /// Interns `name` after validating it.
    pub fn new(name: &str) -> Result<Self, LabelError> {
        if !valid_name(name) {
            return Err(LabelError::InvalidName(name.to_string()));
        }
        let mut interner = INTERNER.lock().unwrap();
        if let Some(&id) = interner.by_name.get(name) {
            return Ok(ActionLabel(id));
        }
        let id = interner.names.len() as u32;
        let leaked: &'static str = Box::leak(name.to_string().into_boxed_str());
        interner.names.push(leaked);
        interner.by_name.insert(leaked, id);
        Ok(ActionLabel(id))
    }

    pub fn as_str(&self) -> &'static str {
        INTERNER.lock().unwrap().names[self.0 as usize]
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}
