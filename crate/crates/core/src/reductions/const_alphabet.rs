//! Re-encoding of an instance over a fixed alphabet.
//!
//! Every original label is enumerated as a (base letter, index) pair; a
//! transition on label `(a, l)` becomes `a`, then `l` times `hash`, then
//! `dollar`. Chains leaving one state on the same base letter share their
//! spine, with a `dollar` exit at each index the state actually uses, so
//! the transformed automata stay deterministic. The output alphabet has
//! exactly `|base| + 2` letters.
//!
//! Verdict preservation depends on the enumeration. When no goal state
//! enables two labels carrying the same base letter, a chain's first letter
//! already commits the goal to one original label and the transformed game
//! is move-for-move the original one, so the simulation verdict is
//! preserved exactly. When a goal state does enable two such labels, the
//! shared spine lets the goal delay the choice between them until after the
//! product has committed a component, which can only lose simulations:
//! a transformed-positive verdict still implies an original-positive one,
//! but not conversely. The enumeration is therefore chosen by a greedy
//! coloring that avoids same-state collisions whenever the goal's
//! co-enabled labels are `|base|`-colorable; [`const_alphabet_conflicts`]
//! reports the collisions that remain.

use std::collections::{HashMap, HashSet};

use crate::automata::{AutomatonBuilder, ServiceAutomaton, StateId};
use crate::labels::{valid_name, ActionLabel};

use super::{EncodeError, InstanceMeta, ReductionInstance};

const HASH: &str = "hash";
const DOLLAR: &str = "dollar";

/// The label enumeration: original label -> (base letter position, index),
/// index counting from 1. Colors are assigned greedily in first-appearance
/// order, dodging goal states that already enable a like-colored label;
/// indices count per color.
fn enumerate_labels(inst: &ReductionInstance, base_len: usize) -> Vec<(ActionLabel, usize, usize)> {
    let mut order: Vec<ActionLabel> = Vec::new();
    let mut seen: HashSet<ActionLabel> = HashSet::new();
    let all = inst
        .services
        .iter()
        .chain(std::iter::once(&inst.goal))
        .flat_map(|a| a.alphabet().iter().copied());
    for l in all {
        if seen.insert(l) {
            order.push(l);
        }
    }

    // Labels co-enabled at some goal state must avoid sharing a letter.
    let mut conflicts: HashMap<ActionLabel, HashSet<ActionLabel>> = HashMap::new();
    for s in 0..inst.goal.state_count() {
        let enabled: Vec<ActionLabel> = inst
            .goal
            .enabled_actions(s)
            .expect("in range")
            .into_iter()
            .collect();
        for &x in &enabled {
            for &y in &enabled {
                if x != y {
                    conflicts.entry(x).or_default().insert(y);
                }
            }
        }
    }

    let mut color: HashMap<ActionLabel, usize> = HashMap::new();
    let mut next_index = vec![0usize; base_len];
    let mut out = Vec::with_capacity(order.len());
    for l in order {
        let neighbors = conflicts.get(&l);
        let collides = |c: usize| {
            neighbors
                .map(|ns| ns.iter().any(|n| color.get(n) == Some(&c)))
                .unwrap_or(false)
        };
        // Least-loaded collision-free color, falling back to least-loaded
        // overall; balanced loads keep chains short.
        let chosen = (0..base_len)
            .filter(|&c| !collides(c))
            .min_by_key(|&c| next_index[c])
            .unwrap_or_else(|| {
                (0..base_len)
                    .min_by_key(|&c| next_index[c])
                    .expect("base is nonempty")
            });
        color.insert(l, chosen);
        next_index[chosen] += 1;
        out.push((l, chosen, next_index[chosen]));
    }
    out
}

/// Number of (goal state, base letter) pairs where two enabled labels share
/// a letter under the enumeration the transform would use. Zero means the
/// transform preserves the simulation verdict exactly.
pub fn const_alphabet_conflicts(inst: &ReductionInstance, base_len: usize) -> usize {
    let table: HashMap<ActionLabel, usize> = enumerate_labels(inst, base_len)
        .into_iter()
        .map(|(l, c, _)| (l, c))
        .collect();
    let mut count = 0;
    for s in 0..inst.goal.state_count() {
        let mut per_color = vec![0usize; base_len];
        for l in inst.goal.enabled_actions(s).expect("in range") {
            per_color[table[&l]] += 1;
        }
        count += per_color.iter().filter(|&&n| n >= 2).count();
    }
    count
}

fn transform_automaton(
    a: &ServiceAutomaton,
    base: &[ActionLabel],
    hash: ActionLabel,
    dollar: ActionLabel,
    table: &HashMap<ActionLabel, (usize, usize)>,
) -> ServiceAutomaton {
    let mut b = AutomatonBuilder::new(a.name());
    for s in a.state_names() {
        b.state(s);
    }
    for &l in base {
        b.label(l);
    }
    b.label(hash);
    b.label(dollar);
    b.initial(a.state_name(a.initial()));

    // Exits grouped per (source, base letter): index -> target.
    let mut chains: HashMap<(StateId, usize), Vec<(usize, StateId)>> = HashMap::new();
    let mut chain_order: Vec<(StateId, usize)> = Vec::new();
    for (src, label, dst) in a.transitions() {
        let &(letter, index) = table.get(&label).expect("all labels enumerated");
        let key = (src, letter);
        let entry = chains.entry(key).or_insert_with(|| {
            chain_order.push(key);
            Vec::new()
        });
        entry.push((index, dst));
    }

    let mut used: HashMap<String, ()> = a.state_names().iter().map(|s| (s.clone(), ())).collect();
    let mut fresh = |b: &mut AutomatonBuilder, stem: &str| -> String {
        let mut name = stem.to_string();
        let mut k = 2;
        while used.contains_key(&name) {
            name = format!("{stem}.{k}");
            k += 1;
        }
        used.insert(name.clone(), ());
        b.state(&name);
        name
    };

    for key in chain_order {
        let (src, letter) = key;
        let mut exits = chains.remove(&key).expect("grouped above");
        exits.sort_unstable();
        let deepest = exits.last().expect("nonempty").0;
        let src_name = a.state_name(src).to_string();
        let letter_name = base[letter].as_str();
        // Spine: src --letter--> node_0 --hash--> ... --hash--> node_deepest.
        let mut spine = Vec::with_capacity(deepest + 1);
        for k in 0..=deepest {
            spine.push(fresh(&mut b, &format!("({src_name},{letter_name},{k})")));
        }
        b.trans(&src_name, base[letter], &spine[0]);
        for k in 0..deepest {
            b.trans(&spine[k], hash, &spine[k + 1]);
        }
        for (index, dst) in exits {
            b.trans(&spine[index], dollar, a.state_name(dst));
        }
    }
    b.build().expect("shared-spine chains keep determinism")
}

/// Rewrites every automaton of `inst` over `base ∪ {hash, dollar}`.
///
/// The simulation verdict is preserved exactly when
/// [`const_alphabet_conflicts`] is zero for the same base; otherwise a
/// positive verdict on the output still implies a positive verdict on the
/// input (see the module notes).
pub fn const_alphabet_transform(
    inst: &ReductionInstance,
    base: &[String],
) -> Result<ReductionInstance, EncodeError> {
    if base.len() < 2 {
        return Err(EncodeError::BaseTooSmall);
    }
    let mut base_labels = Vec::with_capacity(base.len());
    for name in base {
        if !valid_name(name) || name == HASH || name == DOLLAR {
            return Err(EncodeError::BadBaseLetter(name.clone()));
        }
        let l = ActionLabel::new(name).expect("validated");
        if base_labels.contains(&l) {
            return Err(EncodeError::BadBaseLetter(name.clone()));
        }
        base_labels.push(l);
    }
    let hash = ActionLabel::new(HASH).expect("valid");
    let dollar = ActionLabel::new(DOLLAR).expect("valid");

    let enumeration = enumerate_labels(inst, base_labels.len());
    let table: HashMap<ActionLabel, (usize, usize)> = enumeration
        .iter()
        .map(|&(l, letter, index)| (l, (letter, index)))
        .collect();

    let services = inst
        .services
        .iter()
        .map(|s| transform_automaton(s, &base_labels, hash, dollar, &table))
        .collect();
    let goal = transform_automaton(&inst.goal, &base_labels, hash, dollar, &table);

    Ok(ReductionInstance {
        services,
        goal,
        meta: InstanceMeta {
            name: format!("{}_const", inst.meta.name),
            kind: inst.meta.kind,
            tm_name: inst.meta.tm_name.clone(),
            input: inst.meta.input.clone(),
            oracle: inst.meta.oracle,
            const_alphabet: Some(base.to_vec()),
            label_table: enumeration
                .iter()
                .map(|&(l, letter, index)| (l.as_str().to_string(), base[letter].clone(), index))
                .collect(),
        },
    })
}
