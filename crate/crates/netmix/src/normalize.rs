//! Netlist canonicalization.
//!
//! Four passes make structurally equivalent netlists serialize identically:
//!
//! 1. Terminal sort: drain and source of every NMOS/PMOS line are ordered
//!    byte-wise (the device model is drain/source symmetric).
//! 2. Line sort: lines are grouped into input, internal, and output blocks
//!    by the net classes they touch, and sorted byte-wise within each block
//!    by their serialized form excluding the identifier token.
//! 3. Internal-net renumbering: internal nets become `net_internal_0,1,...`
//!    in order of first appearance (top to bottom, left to right).
//! 4. Component renumbering: the i-th line gets index i.
//!
//! Renumbering can perturb the sort order, so the pass sequence iterates to
//! a fixpoint (capped at 16 rounds). The result is idempotent: normalizing
//! a normalized netlist returns it unchanged.

use std::collections::BTreeMap;

use crate::netlist::{ComponentLine, NetClass, NetName, Netlist};
use crate::registry::{ModelRegistry, TerminalRole};

const MAX_ROUNDS: usize = 16;

/// Sort drain/source alphabetically for MOS lines; other lines untouched.
pub fn sort_device_terminals(n: &Netlist, registry: &ModelRegistry) -> Netlist {
    let lines = n
        .lines
        .iter()
        .map(|line| {
            let Some(spec) = registry.get(&line.model) else {
                return line.clone();
            };
            if !spec.is_mos() {
                return line.clone();
            }
            let d = spec.role_position(TerminalRole::Drain).unwrap();
            let s = spec.role_position(TerminalRole::Source).unwrap();
            let mut line = line.clone();
            if line.terminals[d] > line.terminals[s] {
                line.terminals.swap(d, s);
            }
            line
        })
        .collect();
    Netlist {
        lines,
        ports: n.ports,
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum Block {
    Input,
    Internal,
    Output,
}

/// Lines touching an input net take precedence over lines touching an
/// output net; everything else is internal.
fn block_of(line: &ComponentLine) -> Block {
    let mut has_output = false;
    for t in &line.terminals {
        match t.class() {
            NetClass::Input => return Block::Input,
            NetClass::Output => has_output = true,
            _ => {}
        }
    }
    if has_output {
        Block::Output
    } else {
        Block::Internal
    }
}

/// Emit input, internal, and output blocks in that order, each sorted
/// byte-wise by the line body (stable for identical bodies).
pub fn sort_lines(n: &Netlist) -> Netlist {
    let mut blocks: [Vec<&ComponentLine>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for line in &n.lines {
        let b = match block_of(line) {
            Block::Input => 0,
            Block::Internal => 1,
            Block::Output => 2,
        };
        blocks[b].push(line);
    }
    let mut lines = Vec::with_capacity(n.len());
    for block in &mut blocks {
        block.sort_by_key(|l| l.body());
        lines.extend(block.iter().map(|l| (*l).clone()));
    }
    Netlist {
        lines,
        ports: n.ports,
    }
}

/// Line body with every internal net replaced by a fixed token, so the key
/// does not depend on the current internal numbering. The mask token
/// compares against the other net classes exactly like a real internal
/// name does.
fn masked_body(line: &ComponentLine) -> String {
    let mut parts = Vec::with_capacity(1 + line.terminals.len() + line.params.len());
    for t in &line.terminals {
        if t.class() == NetClass::Internal {
            parts.push("net_internal_#".to_string());
        } else {
            parts.push(t.as_str().to_string());
        }
    }
    parts.push(line.model.clone());
    for (k, v) in &line.params {
        parts.push(format!("{k}={v}"));
    }
    parts.join(" ")
}

/// Numbering-independent restart state for the fixpoint loop. The sort
/// order and the internal numbering depend on each other, so the plain
/// pass loop can settle into different but self-consistent numberings for
/// scrambled variants of one circuit. Ordering lines by their masked
/// bodies first and renumbering in that order pins a single starting
/// point; the pass loop then converges to one canonical fixpoint.
fn restart_state(n: &Netlist) -> Netlist {
    let mut blocks: [Vec<&ComponentLine>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for line in &n.lines {
        let b = match block_of(line) {
            Block::Input => 0,
            Block::Internal => 1,
            Block::Output => 2,
        };
        blocks[b].push(line);
    }
    let mut lines = Vec::with_capacity(n.len());
    for block in &mut blocks {
        block.sort_by_key(|l| masked_body(l));
        lines.extend(block.iter().map(|l| (*l).clone()));
    }
    renumber_components(&renumber_internal_nets(&Netlist {
        lines,
        ports: n.ports,
    }))
}

/// Rename internal nets to `net_internal_k` in order of first appearance.
/// The mapping is applied to all lines at once, so swapping numberings
/// cannot collide.
pub fn renumber_internal_nets(n: &Netlist) -> Netlist {
    let mut mapping: BTreeMap<String, usize> = BTreeMap::new();
    for line in &n.lines {
        for t in &line.terminals {
            if t.class() == NetClass::Internal && !mapping.contains_key(t.as_str()) {
                let k = mapping.len();
                mapping.insert(t.as_str().to_string(), k);
            }
        }
    }
    let lines = n
        .lines
        .iter()
        .map(|line| {
            let mut line = line.clone();
            for t in &mut line.terminals {
                if t.class() == NetClass::Internal {
                    *t = NetName::internal(mapping[t.as_str()]);
                }
            }
            line
        })
        .collect();
    Netlist {
        lines,
        ports: n.ports,
    }
}

/// Give the i-th line index i, keeping its prefix letter.
pub fn renumber_components(n: &Netlist) -> Netlist {
    let lines = n
        .lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let mut line = line.clone();
            line.index = i as u32;
            line
        })
        .collect();
    Netlist {
        lines,
        ports: n.ports,
    }
}

fn one_round(n: &Netlist, registry: &ModelRegistry) -> Netlist {
    renumber_components(&renumber_internal_nets(&sort_lines(&sort_device_terminals(
        n, registry,
    ))))
}

fn run_rounds(start: &Netlist, registry: &ModelRegistry) -> Netlist {
    let mut cur = start.clone();
    let mut cur_text = cur.serialize();
    for _ in 0..MAX_ROUNDS {
        let next = one_round(&cur, registry);
        let next_text = next.serialize();
        if next_text == cur_text {
            return next;
        }
        cur = next;
        cur_text = next_text;
    }
    log::warn!(
        "normalization did not reach a fixpoint within {MAX_ROUNDS} rounds; returning last iterate"
    );
    cur
}

fn distinct_internal_count(n: &Netlist) -> usize {
    let mut names = std::collections::BTreeSet::new();
    for t in n.terminal_nets() {
        if t.class() == NetClass::Internal {
            names.insert(t.as_str());
        }
    }
    names.len()
}

fn rename_internals(n: &Netlist, mapping: &[usize]) -> Netlist {
    let lines = n
        .lines
        .iter()
        .map(|line| {
            let mut line = line.clone();
            for t in &mut line.terminals {
                if t.class() == NetClass::Internal {
                    *t = NetName::internal(mapping[t.index().unwrap()]);
                }
            }
            line
        })
        .collect();
    Netlist {
        lines,
        ports: n.ports,
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for v in 0..k {
                if !p.contains(&v) {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

/// Fixpoints with more internal nets than this are returned as-is instead
/// of searching every numbering. No shipped task comes close to the cap.
const EXACT_CANONICAL_CAP: usize = 6;

/// Run the pass sequence until a full round produces no change (capped at
/// 16 rounds), then pick the canonical fixpoint.
///
/// The pass system can admit several self-consistent fixpoints for one
/// circuit because the internal numbering, the drain/source orientation,
/// and the line order all feed each other. The loop's own passes erase
/// line order, orientation, and index differences, so equivalent netlists
/// can only land on fixpoints that differ by an internal-net renaming.
/// Re-running the loop from every renaming of the first fixpoint therefore
/// visits every reachable fixpoint; returning the lexicographically
/// smallest serialization makes the result independent of the input
/// scramble. Idempotence follows: the chosen minimum is itself in the set.
pub fn normalize(n: &Netlist, registry: &ModelRegistry) -> Netlist {
    let base = run_rounds(&restart_state(&sort_device_terminals(n, registry)), registry);
    let k = distinct_internal_count(&base);
    if k <= 1 {
        return base;
    }
    if k > EXACT_CANONICAL_CAP {
        log::debug!("{k} internal nets exceed the exact canonicalization cap");
        return base;
    }
    let mut best_text = base.serialize();
    let mut best = base.clone();
    for perm in permutations(k) {
        if perm.iter().enumerate().all(|(i, v)| i == *v) {
            continue;
        }
        let candidate = run_rounds(&rename_internals(&base, &perm), registry);
        let text = candidate.serialize();
        if text < best_text {
            best_text = text;
            best = candidate;
        }
    }
    best
}
