//! Netlist-level genetic operators: line mixing (crossover and its biased
//! mutation variant), element-wise component mixing, and pruning.
//!
//! All operators are pure given an owned RNG, so the engine can hand each
//! offspring its own seed-derived stream and stay deterministic regardless
//! of scheduling.

use rand::Rng;
use thiserror::Error;

use crate::netlist::{ComponentLine, NetName, Netlist};
use crate::normalize::{normalize, renumber_components};
use crate::registry::{ModelRegistry, TerminalRole};

/// Per-position action when merging two netlists line by line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixAction {
    /// Append the first parent's line at this position, if it exists.
    First,
    /// Append the second parent's line at this position, if it exists.
    Second,
    /// Append the first parent's line, then the second's.
    Both,
    /// Skip both lines.
    None,
}

/// Action distribution for netlist mixing.
///
/// Uniform mode gives each action probability 1/4 (crossover). Biased mode
/// favors the second parent: the second-parent action has probability
/// 1 - alpha and the remaining three split alpha evenly, so alpha is the
/// expected fraction of per-position decisions that do not copy the favored
/// parent's line (mutation, with the elite passed as the second parent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixBias {
    Uniform,
    TowardSecond { alpha: f64 },
}

impl MixBias {
    /// Probabilities in action order (first, second, both, none).
    pub fn probabilities(&self) -> [f64; 4] {
        match *self {
            MixBias::Uniform => [0.25; 4],
            MixBias::TowardSecond { alpha } => {
                let third = alpha / 3.0;
                [third, 1.0 - alpha, third, third]
            }
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> MixAction {
        let p = self.probabilities();
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        for (prob, action) in p.iter().zip([
            MixAction::First,
            MixAction::Second,
            MixAction::Both,
            MixAction::None,
        ]) {
            acc += prob;
            if r < acc {
                return action;
            }
        }
        MixAction::None
    }
}

/// Pruning rate: an L-line netlist is pruned exactly `1 + floor(beta * L)`
/// times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneRate {
    pub beta: f64,
}

impl PruneRate {
    pub fn new(beta: f64) -> Self {
        assert!(beta >= 0.0, "pruning rate must be non-negative");
        Self { beta }
    }

    pub fn steps(&self, lines: usize) -> usize {
        1 + (self.beta * lines as f64).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenopsError {
    #[error("component lines have mismatched element counts ({0} vs {1})")]
    ElementCountMismatch(usize, usize),
}

/// Replay an explicit action sequence over two parents. Position i draws
/// from each parent's i-th line; component indices are rewritten 0..L-1
/// afterwards. The result is returned un-normalized.
pub fn mix_netlists_with(first: &Netlist, second: &Netlist, actions: &[MixAction]) -> Netlist {
    let positions = first.len().max(second.len());
    assert!(
        actions.len() >= positions,
        "need one action per line position"
    );
    let mut lines: Vec<ComponentLine> = Vec::new();
    for (i, action) in actions.iter().enumerate().take(positions) {
        let l1 = first.lines.get(i);
        let l2 = second.lines.get(i);
        match action {
            MixAction::First => {
                if let Some(l) = l1 {
                    lines.push(l.clone());
                }
            }
            MixAction::Second => {
                if let Some(l) = l2 {
                    lines.push(l.clone());
                }
            }
            MixAction::Both => {
                if let Some(l) = l1 {
                    lines.push(l.clone());
                }
                if let Some(l) = l2 {
                    lines.push(l.clone());
                }
            }
            MixAction::None => {}
        }
    }
    renumber_components(&Netlist {
        lines,
        ports: first.ports,
    })
}

/// Merge two netlists by drawing one action per line position from the
/// bias distribution.
pub fn mix_netlists<R: Rng>(
    first: &Netlist,
    second: &Netlist,
    bias: MixBias,
    rng: &mut R,
) -> Netlist {
    let positions = first.len().max(second.len());
    let actions: Vec<MixAction> = (0..positions).map(|_| bias.draw(rng)).collect();
    mix_netlists_with(first, second, &actions)
}

/// Which parent an element is taken from in component mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementChoice {
    First,
    Second,
}

/// One mixable element of a component line. The identifier token is not an
/// element: normalization rewrites it anyway.
#[derive(Debug, Clone, PartialEq)]
enum Element {
    Net(NetName),
    Model(String),
    /// Bulk net and model name fused into one atom, so the pairing always
    /// comes from one parent intact.
    FusedBulkModel(NetName, String),
    Param(String, String),
}

fn line_elements(
    line: &ComponentLine,
    registry: &ModelRegistry,
    force_bulk: bool,
) -> Vec<Element> {
    let fuse = force_bulk
        && registry
            .get(&line.model)
            .map(|s| s.is_mos())
            .unwrap_or(false);
    let mut out = Vec::with_capacity(1 + line.terminals.len() + line.params.len());
    if fuse {
        let spec = registry.get(&line.model).unwrap();
        let bulk = spec.role_position(TerminalRole::Bulk).unwrap();
        for (i, t) in line.terminals.iter().enumerate() {
            if i != bulk {
                out.push(Element::Net(t.clone()));
            }
        }
        out.push(Element::FusedBulkModel(
            line.terminals[bulk].clone(),
            line.model.clone(),
        ));
    } else {
        for t in &line.terminals {
            out.push(Element::Net(t.clone()));
        }
        out.push(Element::Model(line.model.clone()));
    }
    for (k, v) in &line.params {
        out.push(Element::Param(k.clone(), v.clone()));
    }
    out
}

fn line_from_elements(prefix: char, index: u32, elements: Vec<Element>) -> ComponentLine {
    let mut terminals = Vec::new();
    let mut model = String::new();
    let mut params = Vec::new();
    for e in elements {
        match e {
            Element::Net(n) => terminals.push(n),
            Element::Model(m) => model = m,
            Element::FusedBulkModel(bulk, m) => {
                terminals.push(bulk);
                model = m;
            }
            Element::Param(k, v) => params.push((k, v)),
        }
    }
    ComponentLine {
        prefix,
        index,
        terminals,
        model,
        params,
    }
}

/// Merge two equal-shape component lines with an explicit choice per
/// element position. The output keeps the first line's identifier.
pub fn mix_components_with(
    line1: &ComponentLine,
    line2: &ComponentLine,
    registry: &ModelRegistry,
    force_bulk: bool,
    choices: &[ElementChoice],
) -> Result<ComponentLine, GenopsError> {
    if line1.token_count() != line2.token_count() {
        return Err(GenopsError::ElementCountMismatch(
            line1.token_count(),
            line2.token_count(),
        ));
    }
    let e1 = line_elements(line1, registry, force_bulk);
    let e2 = line_elements(line2, registry, force_bulk);
    if e1.len() != e2.len() {
        // Equal token counts but a different terminal/param split (or only
        // one side fused); the lines cannot be aligned element-wise.
        return Err(GenopsError::ElementCountMismatch(e1.len(), e2.len()));
    }
    assert!(
        choices.len() >= e1.len(),
        "need one choice per element position"
    );
    let merged = e1
        .into_iter()
        .zip(e2)
        .zip(choices)
        .map(|((a, b), c)| match c {
            ElementChoice::First => a,
            ElementChoice::Second => b,
        })
        .collect();
    Ok(line_from_elements(line1.prefix, line1.index, merged))
}

/// Merge two component lines, drawing each element from either parent with
/// probability one half.
pub fn mix_components<R: Rng>(
    line1: &ComponentLine,
    line2: &ComponentLine,
    registry: &ModelRegistry,
    force_bulk: bool,
    rng: &mut R,
) -> Result<ComponentLine, GenopsError> {
    if line1.token_count() != line2.token_count() {
        return Err(GenopsError::ElementCountMismatch(
            line1.token_count(),
            line2.token_count(),
        ));
    }
    let count = line_elements(line1, registry, force_bulk).len();
    let choices: Vec<ElementChoice> = (0..count)
        .map(|_| {
            if rng.gen_range(0..2) == 0 {
                ElementChoice::First
            } else {
                ElementChoice::Second
            }
        })
        .collect();
    mix_components_with(line1, line2, registry, force_bulk, &choices)
}

/// Compact a netlist by repeatedly merging two same-shape lines into one.
///
/// The step count is fixed at entry from the current length. Each step
/// groups lines by token count, picks a group with at least two members
/// uniformly at random, picks an ordered pair of distinct member lines,
/// replaces the first with their mix, deletes the second, and
/// re-canonicalizes. If no group has two members the empty netlist is
/// returned and the caller substitutes a random sample.
pub fn prune_netlist<R: Rng>(
    n: &Netlist,
    registry: &ModelRegistry,
    force_bulk: bool,
    rate: PruneRate,
    renormalize: bool,
    rng: &mut R,
) -> Netlist {
    let mut cur = n.clone();
    let steps = rate.steps(cur.len());
    for _ in 0..steps {
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> =
            std::collections::BTreeMap::new();
        for (i, line) in cur.lines.iter().enumerate() {
            groups.entry(line.token_count()).or_default().push(i);
        }
        let qualifying: Vec<&Vec<usize>> = groups.values().filter(|g| g.len() >= 2).collect();
        if qualifying.is_empty() {
            return Netlist::empty(n.ports);
        }
        let group = qualifying[rng.gen_range(0..qualifying.len())];
        let a = rng.gen_range(0..group.len());
        let mut b = rng.gen_range(0..group.len() - 1);
        if b >= a {
            b += 1;
        }
        let (keep, drop) = (group[a], group[b]);
        match mix_components(
            &cur.lines[keep],
            &cur.lines[drop],
            registry,
            force_bulk,
            rng,
        ) {
            Ok(mixed) => {
                cur.lines[keep] = mixed;
                cur.lines.remove(drop);
            }
            // Same token count but different shape: nothing mixable here.
            Err(_) => return Netlist::empty(n.ports),
        }
        cur = if renormalize {
            normalize(&cur, registry)
        } else {
            renumber_components(&cur)
        };
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse_netlist, PortDecl};
    use crate::registry::mos_registry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reg() -> ModelRegistry {
        mos_registry((0.42, 100.0), (0.15, 100.0))
    }

    fn parse(text: &str, ports: PortDecl) -> Netlist {
        parse_netlist(text, &reg(), ports).unwrap()
    }

    const TWO_LINES: &str = "\
X0 0 net_input_0 net_internal_0 0 sky130_fd_pr__nfet_01v8 w=0.741 l=0.205
X1 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.340 l=1.680";

    #[test]
    fn all_first_actions_reproduce_the_first_parent() {
        let n = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let out = mix_netlists_with(&n, &n, &[MixAction::First, MixAction::First]);
        assert_eq!(out.serialize(), n.serialize());
    }

    #[test]
    fn mixed_indices_are_rewritten_sequentially() {
        let n = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let out = mix_netlists_with(&n, &n, &[MixAction::Both, MixAction::None]);
        let ids: Vec<String> = out.lines.iter().map(|l| l.identifier()).collect();
        assert_eq!(ids, ["X0", "X1"]);
        assert_eq!(out.lines[0].body(), out.lines[1].body());
    }

    #[test]
    fn actions_past_the_shorter_parent_emit_nothing_for_it() {
        let both = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let short = Netlist {
            lines: both.lines[..1].to_vec(),
            ports: both.ports,
        };
        let out = mix_netlists_with(&both, &short, &[MixAction::None, MixAction::Second]);
        assert!(out.is_empty());
        let out = mix_netlists_with(&both, &short, &[MixAction::None, MixAction::Both]);
        assert_eq!(out.len(), 1);
        assert_eq!(out.lines[0].body(), both.lines[1].body());
    }

    #[test]
    fn offspring_length_is_bounded_by_combined_parents() {
        let n = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let out = mix_netlists(&n, &n, MixBias::Uniform, &mut rng);
            assert!(out.len() <= 2 * n.len());
            for line in &out.lines {
                assert!(n.lines.iter().any(|p| p.body() == line.body()));
            }
        }
    }

    #[test]
    fn biased_probabilities_put_the_mass_on_second() {
        let p = MixBias::TowardSecond { alpha: 0.3 }.probabilities();
        assert!((p[1] - 0.7).abs() < 1e-12);
        assert!((p[0] - 0.1).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // fraction of favored-parent lines copied: second or both
        assert!((p[1] + p[2] - (1.0 - 0.3 + 0.3 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn uniform_mode_gives_each_parent_a_half_marginal() {
        // both parents have one line each; in uniform mode either line
        // appears with probability 1/2 (first or both / second or both)
        let both = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let p1 = Netlist {
            lines: both.lines[..1].to_vec(),
            ports: both.ports,
        };
        let p2 = Netlist {
            lines: both.lines[1..].to_vec(),
            ports: both.ports,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 20_000usize;
        let (mut from_first, mut from_second) = (0usize, 0usize);
        for _ in 0..trials {
            let child = mix_netlists(&p1, &p2, MixBias::Uniform, &mut rng);
            if child.lines.iter().any(|l| l.body() == both.lines[0].body()) {
                from_first += 1;
            }
            if child.lines.iter().any(|l| l.body() == both.lines[1].body()) {
                from_second += 1;
            }
        }
        let sigma = (0.5f64 * 0.5 / trials as f64).sqrt();
        for count in [from_first, from_second] {
            let freq = count as f64 / trials as f64;
            assert!((freq - 0.5).abs() < 3.0 * sigma, "marginal {freq}");
        }
    }

    #[test]
    fn mixing_identical_components_is_identity() {
        let n = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = mix_components(&n.lines[0], &n.lines[0], &reg(), true, &mut rng).unwrap();
        assert_eq!(out, n.lines[0]);
    }

    #[test]
    fn token_count_mismatch_is_an_error() {
        let n = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let mut short = n.lines[0].clone();
        short.params.pop();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = mix_components(&n.lines[0], &short, &reg(), false, &mut rng).unwrap_err();
        assert_eq!(err, GenopsError::ElementCountMismatch(8, 7));
    }

    #[test]
    fn fused_bulk_and_model_stay_paired() {
        let n = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let (nfet, pfet) = (&n.lines[0], &n.lines[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let out = mix_components(nfet, pfet, &reg(), true, &mut rng).unwrap();
            assert_eq!(out.token_count(), nfet.token_count());
            let bulk = out.terminals[3].as_str();
            match out.model.as_str() {
                "sky130_fd_pr__nfet_01v8" => assert_eq!(bulk, "0"),
                "sky130_fd_pr__pfet_01v8" => assert_eq!(bulk, "net_supply_0"),
                other => panic!("unexpected model {other}"),
            }
        }
    }

    #[test]
    fn prune_step_count_formula() {
        assert_eq!(PruneRate::new(0.1).steps(10), 2);
        assert_eq!(PruneRate::new(0.0).steps(8), 1);
        assert_eq!(PruneRate::new(0.5).steps(7), 4);
        assert_eq!(PruneRate::new(0.1).steps(0), 1);
    }

    #[test]
    fn prune_reduces_line_count_by_step_count() {
        let base = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let mut lines = Vec::new();
        for i in 0..10 {
            let mut l = base.lines[i % 2].clone();
            l.index = i as u32;
            lines.push(l);
        }
        let n = Netlist {
            lines,
            ports: base.ports,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = prune_netlist(&n, &reg(), true, PruneRate::new(0.1), true, &mut rng);
        assert_eq!(out.len(), 8);
    }

    #[test]
    fn prune_of_single_line_falls_back_to_empty() {
        let base = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        let n = Netlist {
            lines: base.lines[..1].to_vec(),
            ports: base.ports,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = prune_netlist(&n, &reg(), true, PruneRate::new(0.1), true, &mut rng);
        assert!(out.is_empty());
    }

    #[test]
    fn operators_are_deterministic_given_a_seed() {
        let n = parse(TWO_LINES, PortDecl::new(1, 1, 1));
        for seed in [0u64, 1, 42] {
            let a = mix_netlists(
                &n,
                &n,
                MixBias::Uniform,
                &mut ChaCha8Rng::seed_from_u64(seed),
            );
            let b = mix_netlists(
                &n,
                &n,
                MixBias::Uniform,
                &mut ChaCha8Rng::seed_from_u64(seed),
            );
            assert_eq!(a, b);
            let p1 = prune_netlist(
                &n,
                &reg(),
                true,
                PruneRate::new(0.5),
                true,
                &mut ChaCha8Rng::seed_from_u64(seed),
            );
            let p2 = prune_netlist(
                &n,
                &reg(),
                true,
                PruneRate::new(0.5),
                true,
                &mut ChaCha8Rng::seed_from_u64(seed),
            );
            assert_eq!(p1, p2);
        }
    }
}
