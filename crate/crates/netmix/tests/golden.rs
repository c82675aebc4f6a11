//! Golden fixtures: two normalized NAND2-search parents, the offspring a
//! recorded crossover action sequence produces, and a recorded pruning of
//! an eight-line parent. Every expectation is byte-exact.

use netmix::genops::{
    mix_components_with, mix_netlists_with, prune_netlist, ElementChoice, MixAction, PruneRate,
};
use netmix::graph::netlist_to_graph;
use netmix::netlist::{parse_netlist, Netlist, PortDecl};
use netmix::normalize::normalize;
use netmix::registry::{mos_registry, ModelRegistry};
use netmix::rng::stream;

fn reg() -> ModelRegistry {
    mos_registry((0.42, 100.0), (0.15, 100.0))
}

const PORTS: PortDecl = PortDecl {
    inputs: 2,
    outputs: 1,
    supplies: 1,
};

const CROSSOVER_PARENT_1: &str = "\
X0 0 net_input_0 net_internal_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.330 l=1.170
X1 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=4.170 l=4.260
X2 net_internal_1 net_internal_1 net_output_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=2.220 l=0.552";

const CROSSOVER_PARENT_2: &str = "\
X0 net_internal_0 net_input_0 net_output_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=3.190 l=0.160
X1 net_output_0 net_input_1 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=4.540 l=2.310
X2 0 net_internal_1 net_output_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.050 l=1.640
X3 net_internal_0 net_internal_1 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1.400 l=0.697
X4 net_internal_2 net_internal_1 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1.150 l=0.571";

/// Lines kept: parent 1's X1, parent 2's X1, parent 2's X4.
const CROSSOVER_ACTIONS: [MixAction; 5] = [
    MixAction::None,
    MixAction::Both,
    MixAction::None,
    MixAction::None,
    MixAction::Second,
];

const CROSSOVER_OFFSPRING: &str = "\
X0 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=4.170 l=4.260
X1 net_output_0 net_input_1 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=4.540 l=2.310
X2 net_internal_0 net_internal_1 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1.150 l=0.571";

const PRUNE_PARENT: &str = "\
X0 0 net_input_0 net_internal_0 0 sky130_fd_pr__nfet_01v8 w=0.741 l=0.205
X1 0 net_input_0 net_internal_0 0 sky130_fd_pr__nfet_01v8 w=0.741 l=0.205
X2 net_internal_0 net_input_1 net_output_0 0 sky130_fd_pr__nfet_01v8 w=0.440 l=2.450
X3 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.340 l=1.680
X4 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.340 l=1.680
X5 0 net_internal_0 net_internal_1 0 sky130_fd_pr__nfet_01v8 w=0.922 l=0.529
X6 0 net_internal_0 net_internal_1 0 sky130_fd_pr__nfet_01v8 w=0.976 l=0.726
X7 net_output_0 net_internal_2 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=3.250 l=0.163";

/// Rows X4 (PMOS) and X5 (NMOS) merged element-wise; the fused bulk/model
/// pair comes from the NMOS.
const COMPONENT_MIX_CHOICES: [ElementChoice; 6] = [
    ElementChoice::First,
    ElementChoice::Second,
    ElementChoice::First,
    ElementChoice::Second,
    ElementChoice::First,
    ElementChoice::First,
];

const MIXED_ROW: &str = "net_output_0 net_internal_0 net_supply_0 0 sky130_fd_pr__nfet_01v8 w=1.340 l=1.680";

const PRUNE_OFFSPRING: &str = "\
X0 0 net_input_0 net_internal_0 0 sky130_fd_pr__nfet_01v8 w=0.741 l=0.205
X1 0 net_input_0 net_internal_0 0 sky130_fd_pr__nfet_01v8 w=0.741 l=0.205
X2 net_internal_0 net_input_1 net_output_0 0 sky130_fd_pr__nfet_01v8 w=0.440 l=2.450
X3 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.340 l=1.680
X4 0 net_internal_0 net_internal_1 0 sky130_fd_pr__nfet_01v8 w=0.976 l=0.726
X5 net_output_0 net_internal_0 net_supply_0 0 sky130_fd_pr__nfet_01v8 w=1.340 l=1.680
X6 net_output_0 net_internal_2 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=3.250 l=0.163";

/// Seed whose draw path reproduces the recorded prune exactly (found by
/// search, frozen; see the ignored `find_prune_seed` helper).
const PRUNE_SEED: u64 = 783;

fn parse(text: &str) -> Netlist {
    parse_netlist(text, &reg(), PORTS).unwrap()
}

#[test]
fn fixtures_round_trip_and_are_normal_forms() {
    for text in [
        CROSSOVER_PARENT_1,
        CROSSOVER_PARENT_2,
        CROSSOVER_OFFSPRING,
        PRUNE_PARENT,
        PRUNE_OFFSPRING,
    ] {
        let n = parse(text);
        assert_eq!(n.serialize(), text, "round trip");
        assert_eq!(
            normalize(&n, &reg()).serialize(),
            text,
            "fixture should be its own normal form"
        );
    }
}

#[test]
fn crossover_action_replay_reproduces_offspring() {
    let p1 = parse(CROSSOVER_PARENT_1);
    let p2 = parse(CROSSOVER_PARENT_2);
    let raw = mix_netlists_with(&p1, &p2, &CROSSOVER_ACTIONS);
    let out = normalize(&raw, &reg());
    assert_eq!(out.serialize(), CROSSOVER_OFFSPRING);
}

#[test]
fn crossover_offspring_graph_shape() {
    let g = netlist_to_graph(&parse(CROSSOVER_OFFSPRING));
    assert_eq!(g.component_count(), 3);
    assert_eq!(g.edge_count(), 12);
}

#[test]
fn component_mix_choice_replay_reproduces_row() {
    let parent = parse(PRUNE_PARENT);
    let mixed = mix_components_with(
        &parent.lines[4],
        &parent.lines[5],
        &reg(),
        true,
        &COMPONENT_MIX_CHOICES,
    )
    .unwrap();
    assert_eq!(mixed.body(), MIXED_ROW);
}

#[test]
fn recorded_prune_reproduces_offspring() {
    let parent = parse(PRUNE_PARENT);
    let mut rng = stream(PRUNE_SEED, 0);
    let out = prune_netlist(&parent, &reg(), true, PruneRate::new(0.1), true, &mut rng);
    assert_eq!(out.serialize(), PRUNE_OFFSPRING);
}

#[test]
fn zero_rate_prune_removes_exactly_one_line() {
    let parent = parse(PRUNE_PARENT);
    for seed in 0..20u64 {
        let out = prune_netlist(
            &parent,
            &reg(),
            true,
            PruneRate::new(0.0),
            true,
            &mut stream(seed, 0),
        );
        assert_eq!(out.len(), 7, "seed {seed}");
    }
}

#[test]
fn shuffled_prune_parent_renormalizes_exactly() {
    let parent = parse(PRUNE_PARENT);
    let mut rng = stream(2024, 0);
    use rand::seq::SliceRandom;
    for _ in 0..50 {
        let mut lines = parent.lines.clone();
        lines.shuffle(&mut rng);
        let shuffled = Netlist {
            lines,
            ports: PORTS,
        };
        assert_eq!(normalize(&shuffled, &reg()).serialize(), PRUNE_PARENT);
    }
}

/// One-off search helper used to freeze PRUNE_SEED.
#[test]
#[ignore]
fn find_prune_seed() {
    let parent = parse(PRUNE_PARENT);
    for seed in 0..1_000_000u64 {
        let mut rng = stream(seed, 0);
        let out = prune_netlist(&parent, &reg(), true, PruneRate::new(0.1), true, &mut rng);
        if out.serialize() == PRUNE_OFFSPRING {
            println!("seed {seed} reproduces the recorded prune");
            return;
        }
    }
    panic!("no seed found in range");
}
