//! Shared fixtures and helpers for the integration suites.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use netmix::netlist::{ComponentLine, NetClass, NetName, Netlist};
use netmix::registry::ModelRegistry;

// Textbook CMOS cells, wired on the library tasks' port conventions.

pub const TEXTBOOK_INV: &str = "\
X0 0 net_input_0 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150
X1 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150";

pub const TEXTBOOK_NAND2: &str = "\
X0 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X1 net_output_0 net_input_1 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X2 net_internal_0 net_input_0 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150
X3 0 net_input_1 net_internal_0 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150";

pub const TEXTBOOK_NOR2: &str = "\
X0 net_internal_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X1 net_internal_0 net_input_1 net_output_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X2 0 net_input_0 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150
X3 0 net_input_1 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150";

pub const TEXTBOOK_AND2: &str = "\
X0 net_internal_1 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X1 net_internal_1 net_input_1 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X2 net_internal_0 net_input_0 net_internal_1 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150
X3 0 net_input_1 net_internal_0 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150
X4 net_output_0 net_internal_1 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X5 0 net_internal_1 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150";

pub const TEXTBOOK_OR2: &str = "\
X0 net_internal_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X1 net_internal_0 net_input_1 net_internal_1 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X2 0 net_input_0 net_internal_1 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150
X3 0 net_input_1 net_internal_1 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150
X4 net_output_0 net_internal_1 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150
X5 0 net_internal_1 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1.000 l=0.150";

// Gate-level fixtures (data = net_input_0, clk = net_input_1): a static
// latch (clock inverter, input tri-inverter, cross-coupled storage pair),
// a buffer acting as a transparent wire, and a storage-free dynamic chain.

pub const TEXTBOOK_LATCH: &str = "\
X0 net_input_1 net_internal_0 sky130_fd_pr__inv_01v8 w=6.000 l=0.150
X1 net_input_0 net_input_1 net_internal_1 sky130_fd_pr__invck_01v8 w=6.000 l=0.150
X2 net_internal_1 net_output_0 sky130_fd_pr__inv_01v8 w=6.000 l=0.150
X3 net_output_0 net_internal_0 net_internal_1 sky130_fd_pr__invck_01v8 w=6.000 l=0.150";

pub const WIRE_BUFFER: &str = "\
X0 net_input_0 net_internal_0 sky130_fd_pr__inv_01v8 w=6.000 l=0.150
X1 net_internal_0 net_output_0 sky130_fd_pr__inv_01v8 w=6.000 l=0.150";

pub const DYNAMIC_CHAIN: &str = "\
X0 net_input_0 net_input_1 net_internal_0 sky130_fd_pr__invck_01v8 w=6.000 l=0.150
X1 net_internal_0 net_output_0 sky130_fd_pr__inv_01v8 w=6.000 l=0.150";

/// Rewrite a netlist into an equivalent scrambled variant: permuted lines,
/// randomly swapped MOS drain/source pairs, an arbitrary internal-net
/// bijection, and fresh distinct component indices.
pub fn scramble(n: &Netlist, registry: &ModelRegistry, rng: &mut ChaCha8Rng) -> Netlist {
    let mut lines: Vec<ComponentLine> = n.lines.clone();
    lines.shuffle(rng);

    let mut internal_names: Vec<String> = Vec::new();
    for line in &lines {
        for t in &line.terminals {
            if t.class() == NetClass::Internal && !internal_names.contains(&t.as_str().to_string())
            {
                internal_names.push(t.as_str().to_string());
            }
        }
    }
    let offset = rng.gen_range(0..4usize);
    let mut targets: Vec<usize> = (0..internal_names.len()).map(|i| i + offset).collect();
    targets.shuffle(rng);

    let mut indices: Vec<u32> = (0..lines.len() as u32 * 3).collect();
    indices.shuffle(rng);

    for (li, line) in lines.iter_mut().enumerate() {
        line.index = indices[li];
        if let Some(spec) = registry.get(&line.model) {
            if spec.is_mos() && rng.gen_bool(0.5) {
                line.terminals.swap(0, 2);
            }
        }
        for t in line.terminals.iter_mut() {
            if t.class() == NetClass::Internal {
                let pos = internal_names
                    .iter()
                    .position(|m| m == t.as_str())
                    .unwrap();
                *t = NetName::internal(targets[pos]);
            }
        }
    }
    Netlist {
        lines,
        ports: n.ports,
    }
}
