//! Composition synthesis for services modeled as finite deterministic automata.
//!
//! A *goal* automaton is realizable from a set of available services when the
//! fully asynchronous product of the services simulates it; the winning
//! strategy is a *delegator* that assigns every requested action to one
//! service. This crate provides:
//!
//! - [`automata`]: deterministic service automata and NFAs, the `.saut` text
//!   format, and bisimulation minimization;
//! - [`product`]: the asynchronous product, explicit construction and banal
//!   (process-ordered) run enumeration;
//! - [`simulation`]: the simulation preorder between a goal and a product,
//!   with a polynomial fast path for pairwise disjoint alphabets;
//! - [`bisimulation`]: bisimilarity between a goal and a product via the
//!   banal-sequence conditions, plus a partition-refinement oracle;
//! - [`delegator`]: extraction and replay of delegation policies;
//! - [`reductions`]: linear-space Turing machine encodings that produce
//!   hard instances with independently computed expected verdicts;
//! - [`gen`]: seeded random generators for automata, machines and corpora.
//!
//! ```
//! use compsyn_core::delegator::synthesize;
//! use compsyn_core::simulation::{largest_simulation, simulates};
//! use compsyn_core::{ProductView, ServiceAutomaton};
//!
//! let flights = ServiceAutomaton::parse(
//!     "automaton flights\nstates: f0 f1\nalphabet: book\ninitial: f0\n\
//!      trans: f0 book -> f1\ntrans: f1 book -> f0\n",
//! )?;
//! let billing = ServiceAutomaton::parse(
//!     "automaton billing\nstates: b0\nalphabet: pay\ninitial: b0\n\
//!      trans: b0 pay -> b0\n",
//! )?;
//! let goal = ServiceAutomaton::parse(
//!     "automaton trip\nstates: t0 t1\nalphabet: book pay\ninitial: t0\n\
//!      trans: t0 book -> t1\ntrans: t1 pay -> t0\n",
//! )?;
//!
//! let product = ProductView::new(vec![flights, billing])?;
//! assert!(simulates(&goal, &product, 1 << 20)?.simulated);
//!
//! let relation = largest_simulation(&goal, &product, 1 << 20)?;
//! let delegator = synthesize(&relation)?;
//! let book = compsyn_core::ActionLabel::new("book")?;
//! let pay = compsyn_core::ActionLabel::new("pay")?;
//! let movers: Vec<usize> = delegator
//!     .replay(&[book, pay, book])?
//!     .into_iter()
//!     .map(|(mover, _)| mover)
//!     .collect();
//! assert_eq!(movers, vec![0, 1, 0]);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod automata;
pub mod bisimulation;
pub mod delegator;
pub mod gen;
pub mod labels;
pub mod product;
pub mod reductions;
pub mod simulation;

pub use automata::{Nfa, ServiceAutomaton, StateId};
pub use labels::ActionLabel;
pub use product::{GlobalState, ProductView};
