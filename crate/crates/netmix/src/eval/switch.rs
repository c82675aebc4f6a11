//! Built-in digital evaluator.
//!
//! Combinational mode treats NMOS/PMOS lines as gate-controlled
//! bidirectional switches driven from the rails: an NMOS conducts while its
//! gate is strong 1, a PMOS while its gate is strong 0. Conduction carries
//! device physics with it: an NMOS passes a 1 (and a PMOS a 0) only with a
//! threshold drop, so such signals arrive degraded and do not count as
//! valid logic levels. For each input vector the conduction fixpoint is
//! computed and every output is compared to the truth table. Two proxies
//! are also measured: the number of vectors with a conducting
//! supply-to-ground path (power), and the maximum conducting-path length
//! from a driver to an output (timing).
//!
//! Sequential mode evaluates subcircuit gates (inverters and tri-state
//! inverters) over a stimulus sequence with charge retention: a net driven
//! by no active output keeps its previous value weakly. Long-hold steps
//! decay retained charge first, which separates static storage (a driven
//! feedback loop) from dynamic storage (charge parked on a net).

use std::collections::BTreeMap;

use crate::eval::{EvalError, Evaluator, Measurements, SeqStimulus, TruthTable};
use crate::netlist::{NetClass, NetName, Netlist};
use crate::registry::{DeviceClass, GateKind, ModelRegistry, TerminalRole};

/// Signal level on a net. Strong values come from an active driver, weak
/// values from retained charge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    Strong0,
    Strong1,
    Weak0,
    Weak1,
    Float,
    Conflict,
}

impl Level {
    fn strong(b: bool) -> Level {
        if b {
            Level::Strong1
        } else {
            Level::Strong0
        }
    }

    fn logic(self) -> Option<bool> {
        match self {
            Level::Strong0 | Level::Weak0 => Some(false),
            Level::Strong1 | Level::Weak1 => Some(true),
            Level::Float | Level::Conflict => None,
        }
    }

    /// Value kept by an undriven net: strong decays to weak, weak persists,
    /// everything else floats.
    fn retained(self) -> Level {
        match self {
            Level::Strong0 | Level::Weak0 => Level::Weak0,
            Level::Strong1 | Level::Weak1 => Level::Weak1,
            Level::Float | Level::Conflict => Level::Float,
        }
    }

    /// Long-hold decay: retained charge is lost.
    fn decayed(self) -> Level {
        match self {
            Level::Weak0 | Level::Weak1 => Level::Float,
            other => other,
        }
    }
}

/// Net table shared by both modes: declared ports first, then referenced
/// nets in first-appearance order.
struct NetTable {
    names: Vec<NetName>,
    index: BTreeMap<String, usize>,
}

impl NetTable {
    fn build(n: &Netlist) -> Self {
        let mut names = Vec::new();
        let mut index = BTreeMap::new();
        let mut intern = |net: &NetName, names: &mut Vec<NetName>| {
            if !index.contains_key(net.as_str()) {
                index.insert(net.as_str().to_string(), names.len());
                names.push(net.clone());
            }
        };
        for p in n.ports.nets() {
            intern(&p, &mut names);
        }
        for t in n.terminal_nets() {
            intern(t, &mut names);
        }
        Self { names, index }
    }

    fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

struct Fet {
    drain: usize,
    gate: usize,
    source: usize,
    nmos: bool,
}

/// Evaluate a MOS-only netlist against a truth table.
pub fn evaluate_combinational(
    n: &Netlist,
    table: &TruthTable,
    registry: &ModelRegistry,
) -> Result<Measurements, EvalError> {
    let nets = NetTable::build(n);
    let mut fets = Vec::with_capacity(n.len());
    for line in &n.lines {
        let spec = registry
            .get(&line.model)
            .ok_or_else(|| EvalError::UnsupportedModel(line.model.clone()))?;
        if !spec.is_mos() {
            return Err(EvalError::UnsupportedModel(line.model.clone()));
        }
        let pos = |role| spec.role_position(role).unwrap();
        let id = |t: &NetName| nets.id(t.as_str()).unwrap();
        fets.push(Fet {
            drain: id(&line.terminals[pos(TerminalRole::Drain)]),
            gate: id(&line.terminals[pos(TerminalRole::Gate)]),
            source: id(&line.terminals[pos(TerminalRole::Source)]),
            nmos: spec.class == DeviceClass::Nmos,
        });
    }

    let output_ids: Vec<Option<usize>> = (0..table.outputs)
        .map(|j| nets.id(NetName::output(j).as_str()))
        .collect();

    let mut m = Measurements::new();
    let mut shorts = 0usize;
    let mut depth = 0usize;

    for (row, expected) in table.rows.iter().enumerate() {
        let input_bits = table.input_bits(row);
        let sources: Vec<Option<bool>> = nets
            .names
            .iter()
            .map(|net| match net.class() {
                NetClass::Ground => Some(false),
                NetClass::Supply => Some(true),
                NetClass::Input => net
                    .index()
                    .and_then(|k| input_bits.get(k).copied()),
                _ => None,
            })
            .collect();

        let mut levels: Vec<Level> = sources
            .iter()
            .map(|s| s.map(Level::strong).unwrap_or(Level::Float))
            .collect();

        let cap = 4 * nets.len().max(1);
        let mut on = vec![false; fets.len()];
        let mut row_short = false;
        let mut stable = false;
        // reachability over ON channels, restricted to one device polarity
        // when required: an NMOS passes a 1 (and a PMOS a 0) only with a
        // threshold drop, so a signal stays strong only while it avoids
        // the wrong-polarity devices
        let reach = |starts: &[usize], on: &[bool], edges: &dyn Fn(&Fet) -> bool| -> Vec<bool> {
            let mut seen = vec![false; nets.len()];
            let mut stack: Vec<usize> = starts.to_vec();
            for &s in starts {
                seen[s] = true;
            }
            while let Some(net) = stack.pop() {
                for (i, f) in fets.iter().enumerate() {
                    if !on[i] || !edges(f) {
                        continue;
                    }
                    for (a, b) in [(f.drain, f.source), (f.source, f.drain)] {
                        if a == net && !seen[b] {
                            seen[b] = true;
                            stack.push(b);
                        }
                    }
                }
            }
            seen
        };
        for _ in 0..cap {
            for (i, f) in fets.iter().enumerate() {
                on[i] = match levels[f.gate] {
                    Level::Strong1 => f.nmos,
                    Level::Strong0 => !f.nmos,
                    _ => false,
                };
            }
            let one_sources: Vec<usize> =
                (0..nets.len()).filter(|&i| sources[i] == Some(true)).collect();
            let zero_sources: Vec<usize> =
                (0..nets.len()).filter(|&i| sources[i] == Some(false)).collect();
            let strong1 = reach(&one_sources, &on, &|f| !f.nmos);
            let strong0 = reach(&zero_sources, &on, &|f| f.nmos);
            let deg1 = reach(&one_sources, &on, &|_| true);
            let deg0 = reach(&zero_sources, &on, &|_| true);

            let next: Vec<Level> = (0..nets.len())
                .map(|net| {
                    if let Some(v) = sources[net] {
                        return Level::strong(v);
                    }
                    match (strong1[net], strong0[net]) {
                        (true, true) => return Level::Conflict,
                        (true, false) => return Level::Strong1,
                        (false, true) => return Level::Strong0,
                        (false, false) => {}
                    }
                    match (deg1[net], deg0[net]) {
                        (true, true) => Level::Conflict,
                        (true, false) => Level::Weak1,
                        (false, true) => Level::Weak0,
                        (false, false) => Level::Float,
                    }
                })
                .collect();
            // a conducting path joining the rails is the power proxy
            let ground_nets: Vec<usize> = (0..nets.len())
                .filter(|&i| nets.names[i].class() == NetClass::Ground)
                .collect();
            let from_ground = reach(&ground_nets, &on, &|_| true);
            row_short = (0..nets.len())
                .any(|i| nets.names[i].class() == NetClass::Supply && from_ground[i]);
            if next == levels {
                stable = true;
                break;
            }
            levels = next;
        }
        if !stable {
            // no fixpoint within the sweep cap: the driven state is
            // unresolved, only the external sources keep their values
            levels = sources
                .iter()
                .map(|s| s.map(Level::strong).unwrap_or(Level::Float))
                .collect();
            on.iter_mut().for_each(|o| *o = false);
            row_short = false;
        }

        // shortest conducting path from any driver to each output
        let mut dist: Vec<Option<usize>> = sources
            .iter()
            .map(|s| if s.is_some() { Some(0) } else { None })
            .collect();
        let mut frontier: Vec<usize> = (0..nets.len()).filter(|&i| dist[i].is_some()).collect();
        while !frontier.is_empty() {
            let mut next_frontier = Vec::new();
            for &net in &frontier {
                let d = dist[net].unwrap();
                for (i, f) in fets.iter().enumerate() {
                    if !on[i] {
                        continue;
                    }
                    for (a, b) in [(f.drain, f.source), (f.source, f.drain)] {
                        if a == net && dist[b].is_none() {
                            dist[b] = Some(d + 1);
                            next_frontier.push(b);
                        }
                    }
                }
            }
            frontier = next_frontier;
        }

        let mut conflict_output = false;
        for (j, out) in output_ids.iter().enumerate() {
            let level = out.map(|id| levels[id]).unwrap_or(Level::Float);
            // a degraded level is not a valid logic output
            let correct = level == Level::strong(expected[j]);
            m.insert(&format!("row{row}_out{j}"), if correct { 1.0 } else { 0.0 });
            if level == Level::Conflict {
                conflict_output = true;
            }
            if matches!(level, Level::Strong0 | Level::Strong1) {
                if let Some(d) = out.and_then(|id| dist[id]) {
                    depth = depth.max(d);
                }
            }
        }
        // contention on an output behaves like a short for the power proxy
        if row_short || conflict_output {
            shorts += 1;
        }
    }

    m.insert("short_circuits", shorts as f64);
    m.insert("depth", depth as f64);
    Ok(m)
}

enum GateInstance {
    Inverter { input: usize, output: usize },
    TriInverter { data: usize, clk: usize, output: usize },
}

/// Evaluate a subcircuit-only netlist against a stimulus sequence.
pub fn evaluate_sequential(
    n: &Netlist,
    stim: &SeqStimulus,
    registry: &ModelRegistry,
) -> Result<Measurements, EvalError> {
    let nets = NetTable::build(n);
    let mut gates = Vec::with_capacity(n.len());
    for line in &n.lines {
        let spec = registry
            .get(&line.model)
            .ok_or_else(|| EvalError::UnsupportedModel(line.model.clone()))?;
        let Some(kind) = spec.gate else {
            return Err(EvalError::UnsupportedModel(line.model.clone()));
        };
        let pos = |role| spec.role_position(role).unwrap();
        let id = |t: &NetName| nets.id(t.as_str()).unwrap();
        gates.push(match kind {
            GateKind::Inverter => GateInstance::Inverter {
                input: id(&line.terminals[pos(TerminalRole::In)]),
                output: id(&line.terminals[pos(TerminalRole::Out)]),
            },
            GateKind::TriInverter => GateInstance::TriInverter {
                data: id(&line.terminals[pos(TerminalRole::In)]),
                clk: id(&line.terminals[pos(TerminalRole::Clk)]),
                output: id(&line.terminals[pos(TerminalRole::Out)]),
            },
        });
    }

    let input_ids: Vec<Option<usize>> = (0..stim.inputs)
        .map(|j| nets.id(NetName::input(j).as_str()))
        .collect();
    let output_ids: Vec<Option<usize>> = (0..stim.outputs)
        .map(|j| nets.id(NetName::output(j).as_str()))
        .collect();

    let mut m = Measurements::new();
    let mut conflict_steps = 0usize;
    let mut levels: Vec<Level> = vec![Level::Float; nets.len()];

    for (step_no, step) in stim.steps.iter().enumerate() {
        if step.decay {
            for l in levels.iter_mut() {
                *l = l.decayed();
            }
        }
        let mut driven_inputs: Vec<(usize, bool)> = Vec::new();
        for (j, v) in step.inputs.iter().enumerate() {
            if let (Some(id), Some(bit)) = (input_ids.get(j).copied().flatten(), *v) {
                driven_inputs.push((id, bit));
            }
        }

        let cap = 4 * nets.len().max(1);
        let mut stable = false;
        for _ in 0..cap {
            let mut drives: Vec<(bool, bool)> = vec![(false, false); nets.len()];
            let add = |net: usize, v: bool, drives: &mut Vec<(bool, bool)>| {
                if v {
                    drives[net].1 = true;
                } else {
                    drives[net].0 = true;
                }
            };
            for &(net, bit) in &driven_inputs {
                add(net, bit, &mut drives);
            }
            for g in &gates {
                match g {
                    GateInstance::Inverter { input, output } => {
                        if let Some(v) = levels[*input].logic() {
                            add(*output, !v, &mut drives);
                        }
                    }
                    GateInstance::TriInverter { data, clk, output } => {
                        if levels[*clk].logic() == Some(true) {
                            if let Some(v) = levels[*data].logic() {
                                add(*output, !v, &mut drives);
                            }
                        }
                    }
                }
            }
            let next: Vec<Level> = (0..nets.len())
                .map(|net| match drives[net] {
                    (true, true) => Level::Conflict,
                    (true, false) => Level::Strong0,
                    (false, true) => Level::Strong1,
                    (false, false) => levels[net].retained(),
                })
                .collect();
            if next == levels {
                stable = true;
                break;
            }
            levels = next;
        }
        if !stable {
            // oscillating feedback: the state is unresolved except for the
            // externally driven inputs
            for l in levels.iter_mut() {
                *l = Level::Float;
            }
            for &(net, bit) in &driven_inputs {
                levels[net] = Level::strong(bit);
            }
        }

        if levels.contains(&Level::Conflict) {
            conflict_steps += 1;
        }
        for (j, out) in output_ids.iter().enumerate() {
            if let Some(expected) = step.expected.get(j).copied().flatten() {
                let level = out.map(|id| levels[id]).unwrap_or(Level::Float);
                let correct = level.logic() == Some(expected);
                m.insert(
                    &format!("step{step_no}_out{j}"),
                    if correct { 1.0 } else { 0.0 },
                );
            }
        }
    }

    m.insert("conflict_steps", conflict_steps as f64);
    Ok(m)
}

/// Evaluator wrapper around [`evaluate_combinational`].
pub struct SwitchEvaluator {
    pub table: TruthTable,
    pub registry: ModelRegistry,
}

impl Evaluator for SwitchEvaluator {
    fn evaluate(&self, n: &Netlist) -> Result<Measurements, EvalError> {
        evaluate_combinational(n, &self.table, &self.registry)
    }
}

/// Evaluator wrapper around [`evaluate_sequential`].
pub struct GateEvaluator {
    pub stimulus: SeqStimulus,
    pub registry: ModelRegistry,
}

impl Evaluator for GateEvaluator {
    fn evaluate(&self, n: &Netlist) -> Result<Measurements, EvalError> {
        evaluate_sequential(n, &self.stimulus, &self.registry)
    }
}
