//! Uniform random netlist generation under wiring rules, plus the four
//! graph-level consistency checks used to filter or repair candidates.

use std::collections::BTreeSet;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::graph::{nets_of_class, netlist_to_graph, CircuitGraph};
use crate::netlist::{ComponentLine, NetClass, NetName, Netlist, PortDecl};
use crate::normalize::normalize;
use crate::registry::{DeviceClass, ModelRegistry, TerminalRole};

/// Graph-level structural tests on a candidate circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckKind {
    /// Every declared input and output net touches at least one device.
    ConnectedIo,
    /// An undirected path exists between every (input, output) pair.
    PathsIo,
    /// Internal nets have degree >= 2 and declared port nets degree >= 1.
    NoFloatingNets,
    /// Ignoring rails, the circuit forms a single connected component.
    NoIsolatedSubgraphs,
}

impl CheckKind {
    pub const ALL: [CheckKind; 4] = [
        CheckKind::ConnectedIo,
        CheckKind::PathsIo,
        CheckKind::NoFloatingNets,
        CheckKind::NoIsolatedSubgraphs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckKind::ConnectedIo => "connected_io",
            CheckKind::PathsIo => "paths_io",
            CheckKind::NoFloatingNets => "no_floating_nets",
            CheckKind::NoIsolatedSubgraphs => "no_isolated_subgraphs",
        }
    }
}

impl FromStr for CheckKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "connected_io" => Ok(CheckKind::ConnectedIo),
            "paths_io" => Ok(CheckKind::PathsIo),
            "no_floating_nets" => Ok(CheckKind::NoFloatingNets),
            "no_isolated_subgraphs" => Ok(CheckKind::NoIsolatedSubgraphs),
            other => Err(format!("unknown consistency check {other:?}")),
        }
    }
}

/// Evaluate one consistency check on a circuit graph.
pub fn check(kind: CheckKind, g: &CircuitGraph, ports: &PortDecl) -> bool {
    match kind {
        CheckKind::ConnectedIo => {
            let io = ports
                .nets()
                .into_iter()
                .filter(|n| !n.is_rail())
                .collect::<Vec<_>>();
            io.iter()
                .all(|n| g.net_id(n.as_str()).map(|i| g.net_degree(i) > 0) == Some(true))
        }
        CheckKind::PathsIo => {
            let inputs: Vec<usize> = (0..ports.inputs)
                .filter_map(|k| g.net_id(NetName::input(k).as_str()))
                .collect();
            let outputs: Vec<usize> = (0..ports.outputs)
                .filter_map(|k| g.net_id(NetName::output(k).as_str()))
                .collect();
            inputs
                .iter()
                .all(|&i| outputs.iter().all(|&o| g.nets_connected(i, o)))
        }
        CheckKind::NoFloatingNets => {
            let internals_ok = nets_of_class(g, NetClass::Internal)
                .into_iter()
                .all(|i| g.net_degree(i) >= 2);
            let ports_ok = ports
                .nets()
                .iter()
                .all(|n| g.net_id(n.as_str()).map(|i| g.net_degree(i) >= 1) == Some(true));
            internals_ok && ports_ok
        }
        CheckKind::NoIsolatedSubgraphs => g.non_rail_component_count() <= 1,
    }
}

/// What the random sampler may draw and which rules it must respect.
#[derive(Debug, Clone)]
pub struct SamplerSpec {
    /// Candidate models with selection weights.
    pub pool: Vec<(String, f64)>,
    /// Inclusive range for the component count.
    pub count_range: (usize, usize),
    /// Inclusive range for how many internal nets are available for wiring.
    pub internal_range: (usize, usize),
    pub ports: PortDecl,
    /// Tie NMOS bulk to ground and PMOS bulk to a supply net.
    pub force_bulk: bool,
    /// Keep gates off ground and supply nets.
    pub no_gate_to_rail: bool,
    pub checks_during: BTreeSet<CheckKind>,
    pub checks_after: BTreeSet<CheckKind>,
    /// Canonicalize the sample before returning it. Disabled only by the
    /// normalization-ablation mode.
    pub normalize: bool,
}

impl SamplerSpec {
    pub fn new(pool: Vec<(String, f64)>, count_range: (usize, usize), ports: PortDecl) -> Self {
        assert!(!pool.is_empty(), "sampler needs at least one model");
        assert!(pool.iter().all(|(_, w)| *w > 0.0));
        assert!(count_range.0 >= 1 && count_range.0 <= count_range.1);
        Self {
            pool,
            count_range,
            internal_range: (0, 0),
            ports,
            force_bulk: true,
            no_gate_to_rail: true,
            checks_during: BTreeSet::new(),
            checks_after: BTreeSet::new(),
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("could not satisfy consistency checks within {0} attempts")]
    Exhausted(usize),
    #[error("sampler spec references unknown model {0:?}")]
    UnknownModel(String),
}

const MAX_ATTEMPTS: usize = 100;

/// Round to three significant decimal digits.
fn round_sig3(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(2 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

/// Format a sizing value with three significant digits and at least three
/// decimals, e.g. 1.33 -> "1.330", 0.0421 -> "0.0421".
pub fn format_sizing(v: f64) -> String {
    let v = round_sig3(v);
    let decimals = if v <= 0.0 {
        3
    } else {
        (2 - v.log10().floor() as i64).max(3) as usize
    };
    format!("{v:.decimals$}")
}

fn draw_model<'a, R: Rng>(
    pool: &'a [(String, f64)],
    rng: &mut R,
) -> &'a str {
    let total: f64 = pool.iter().map(|(_, w)| w).sum();
    let mut r = rng.gen::<f64>() * total;
    for (name, w) in pool {
        r -= w;
        if r < 0.0 {
            return name;
        }
    }
    &pool.last().expect("pool must be non-empty").0
}

fn draw_net<'a, R: Rng>(universe: &'a [NetName], rng: &mut R) -> &'a NetName {
    &universe[rng.gen_range(0..universe.len())]
}

/// During-generation admission test for the netlist built so far.
///
/// A partial netlist cannot satisfy the global checks yet, so those bind
/// only once the last line is placed. The isolated-subgraph check has a
/// natural incremental form and binds on every line: the lines placed so
/// far must form one non-rail component (declared-but-untouched ports are
/// exempt until the end).
fn during_ok(
    kinds: &BTreeSet<CheckKind>,
    lines: &[ComponentLine],
    ports: PortDecl,
    is_final: bool,
) -> bool {
    if kinds.is_empty() {
        return true;
    }
    let scoped = Netlist {
        lines: lines.to_vec(),
        ports: if is_final { ports } else { PortDecl::default() },
    };
    let g = netlist_to_graph(&scoped);
    kinds.iter().all(|k| match (k, is_final) {
        (CheckKind::NoIsolatedSubgraphs, _) => check(*k, &g, &ports),
        (_, true) => check(*k, &g, &ports),
        (_, false) => true,
    })
}

fn sample_one<R: Rng>(
    spec: &SamplerSpec,
    registry: &ModelRegistry,
    rng: &mut R,
) -> Result<Netlist, SampleError> {
    let count = rng.gen_range(spec.count_range.0..=spec.count_range.1);
    let n_internal = rng.gen_range(spec.internal_range.0..=spec.internal_range.1);

    let mut universe: Vec<NetName> = vec![NetName::ground()];
    universe.extend((0..spec.ports.supplies).map(NetName::supply));
    universe.extend((0..spec.ports.inputs).map(NetName::input));
    universe.extend((0..spec.ports.outputs).map(NetName::output));
    universe.extend((0..n_internal).map(NetName::internal));
    let non_rail: Vec<NetName> = universe.iter().filter(|n| !n.is_rail()).cloned().collect();
    let supplies: Vec<NetName> = (0..spec.ports.supplies).map(NetName::supply).collect();

    let mut lines: Vec<ComponentLine> = Vec::new();
    for i in 0..count {
        let is_final = i + 1 == count;
        let mut admitted = false;
        for _ in 0..MAX_ATTEMPTS {
            let model = draw_model(&spec.pool, rng).to_string();
            let mspec = registry
                .get(&model)
                .ok_or_else(|| SampleError::UnknownModel(model.clone()))?;
            let mut terminals = Vec::with_capacity(mspec.arity());
            for role in &mspec.roles {
                let net = match role {
                    TerminalRole::Gate if spec.no_gate_to_rail && !non_rail.is_empty() => {
                        draw_net(&non_rail, rng).clone()
                    }
                    TerminalRole::Bulk if spec.force_bulk => match mspec.class {
                        DeviceClass::Nmos => NetName::ground(),
                        DeviceClass::Pmos if !supplies.is_empty() => {
                            draw_net(&supplies, rng).clone()
                        }
                        _ => NetName::ground(),
                    },
                    _ => draw_net(&universe, rng).clone(),
                };
                terminals.push(net);
            }
            let params = mspec
                .params
                .iter()
                .map(|p| {
                    let v = if p.min == p.max {
                        p.min
                    } else {
                        // log-uniform: sizing ranges span decades
                        let u = rng.gen::<f64>();
                        (p.min.ln() + u * (p.max.ln() - p.min.ln())).exp()
                    };
                    (p.key.clone(), format_sizing(v))
                })
                .collect();
            let line = ComponentLine {
                prefix: 'X',
                index: i as u32,
                terminals,
                model,
                params,
            };

            lines.push(line);
            if during_ok(&spec.checks_during, &lines, spec.ports, is_final) {
                admitted = true;
                break;
            }
            lines.pop();
        }
        if !admitted {
            return Err(SampleError::Exhausted(MAX_ATTEMPTS));
        }
    }

    let netlist = Netlist {
        lines,
        ports: spec.ports,
    };
    Ok(if spec.normalize {
        normalize(&netlist, registry)
    } else {
        netlist
    })
}

/// Draw a random netlist: component count uniform in range, models by
/// weight, terminal nets uniform over the legal universe for each role,
/// sizing log-uniform rounded to three significant digits.
pub fn sample_random_netlist<R: Rng>(
    spec: &SamplerSpec,
    registry: &ModelRegistry,
    rng: &mut R,
) -> Result<Netlist, SampleError> {
    if spec.checks_after.is_empty() {
        return sample_one(spec, registry, rng);
    }
    for _ in 0..MAX_ATTEMPTS {
        let n = sample_one(spec, registry, rng)?;
        let g = netlist_to_graph(&n);
        if spec
            .checks_after
            .iter()
            .all(|k| check(*k, &g, &spec.ports))
        {
            return Ok(n);
        }
    }
    Err(SampleError::Exhausted(MAX_ATTEMPTS))
}
