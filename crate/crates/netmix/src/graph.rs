//! Bipartite circuit graph: component nodes on one side, net nodes on the
//! other, one edge per terminal. Declared port nets are always present as
//! nodes even when no line touches them.

use std::collections::BTreeMap;

use crate::netlist::{NetClass, NetName, Netlist};

#[derive(Debug, Clone)]
pub struct CircuitGraph {
    nets: Vec<NetName>,
    net_index: BTreeMap<String, usize>,
    component_count: usize,
    /// (component, net, terminal position) per terminal.
    edges: Vec<(usize, usize, usize)>,
    net_adj: Vec<Vec<(usize, usize)>>,
    comp_adj: Vec<Vec<(usize, usize)>>,
}

impl CircuitGraph {
    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nets(&self) -> &[NetName] {
        &self.nets
    }

    pub fn net_id(&self, name: &str) -> Option<usize> {
        self.net_index.get(name).copied()
    }

    pub fn net_degree(&self, net: usize) -> usize {
        self.net_adj[net].len()
    }

    /// Components touching a net, with the terminal position of each edge.
    pub fn net_neighbors(&self, net: usize) -> &[(usize, usize)] {
        &self.net_adj[net]
    }

    /// Nets touched by a component, with the terminal position of each edge.
    pub fn component_neighbors(&self, comp: usize) -> &[(usize, usize)] {
        &self.comp_adj[comp]
    }

    /// True if an undirected path exists between the two nets in the full
    /// bipartite graph.
    pub fn nets_connected(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen_net = vec![false; self.nets.len()];
        let mut seen_comp = vec![false; self.component_count];
        let mut stack = vec![from];
        seen_net[from] = true;
        while let Some(net) = stack.pop() {
            for &(comp, _) in &self.net_adj[net] {
                if seen_comp[comp] {
                    continue;
                }
                seen_comp[comp] = true;
                for &(next, _) in &self.comp_adj[comp] {
                    if next == to {
                        return true;
                    }
                    if !seen_net[next] {
                        seen_net[next] = true;
                        stack.push(next);
                    }
                }
            }
        }
        false
    }

    /// Connected-component count of the graph restricted to component nodes
    /// and non-rail net nodes. Rail nets are dropped entirely: they connect
    /// everything and would make the test vacuous.
    pub fn non_rail_component_count(&self) -> usize {
        let keep_net: Vec<bool> = self.nets.iter().map(|n| !n.is_rail()).collect();
        let mut seen_net = vec![false; self.nets.len()];
        let mut seen_comp = vec![false; self.component_count];
        let mut groups = 0;

        let flood = |start_net: Option<usize>,
                         start_comp: Option<usize>,
                         seen_net: &mut Vec<bool>,
                         seen_comp: &mut Vec<bool>| {
            let mut net_stack: Vec<usize> = Vec::new();
            let mut comp_stack: Vec<usize> = Vec::new();
            if let Some(n) = start_net {
                seen_net[n] = true;
                net_stack.push(n);
            }
            if let Some(c) = start_comp {
                seen_comp[c] = true;
                comp_stack.push(c);
            }
            while !net_stack.is_empty() || !comp_stack.is_empty() {
                while let Some(net) = net_stack.pop() {
                    for &(comp, _) in &self.net_adj[net] {
                        if !seen_comp[comp] {
                            seen_comp[comp] = true;
                            comp_stack.push(comp);
                        }
                    }
                }
                while let Some(comp) = comp_stack.pop() {
                    for &(net, _) in &self.comp_adj[comp] {
                        if keep_net[net] && !seen_net[net] {
                            seen_net[net] = true;
                            net_stack.push(net);
                        }
                    }
                }
            }
        };

        for net in 0..self.nets.len() {
            if keep_net[net] && !seen_net[net] {
                groups += 1;
                flood(Some(net), None, &mut seen_net, &mut seen_comp);
            }
        }
        for comp in 0..self.component_count {
            if !seen_comp[comp] {
                groups += 1;
                flood(None, Some(comp), &mut seen_net, &mut seen_comp);
            }
        }
        groups
    }
}

/// Build the bipartite graph of a netlist. Net nodes are the declared port
/// nets plus every net referenced by a line, in first-appearance order.
pub fn netlist_to_graph(n: &Netlist) -> CircuitGraph {
    let mut nets: Vec<NetName> = Vec::new();
    let mut net_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut intern = |name: &NetName, nets: &mut Vec<NetName>| -> usize {
        if let Some(&i) = net_index.get(name.as_str()) {
            return i;
        }
        let i = nets.len();
        nets.push(name.clone());
        net_index.insert(name.as_str().to_string(), i);
        i
    };

    for port in n.ports.nets() {
        intern(&port, &mut nets);
    }

    let component_count = n.lines.len();
    let mut edges = Vec::new();
    let mut comp_adj = vec![Vec::new(); component_count];
    for (ci, line) in n.lines.iter().enumerate() {
        for (pos, term) in line.terminals.iter().enumerate() {
            let ni = intern(term, &mut nets);
            edges.push((ci, ni, pos));
            comp_adj[ci].push((ni, pos));
        }
    }
    let mut net_adj = vec![Vec::new(); nets.len()];
    for &(ci, ni, pos) in &edges {
        net_adj[ni].push((ci, pos));
    }

    CircuitGraph {
        nets,
        net_index,
        component_count,
        edges,
        net_adj,
        comp_adj,
    }
}

/// Nets of a given class among the graph's nodes.
pub fn nets_of_class(g: &CircuitGraph, class: NetClass) -> Vec<usize> {
    g.nets()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.class() == class)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse_netlist, PortDecl};
    use crate::registry::mos_registry;

    #[test]
    fn single_line_graph_counts() {
        let reg = mos_registry((0.42, 100.0), (0.15, 100.0));
        let text = "X0 0 net_input_0 net_internal_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.330 l=1.170";
        let n = parse_netlist(text, &reg, PortDecl::new(1, 0, 1)).unwrap();
        let g = netlist_to_graph(&n);
        assert_eq!(g.component_count(), 1);
        assert_eq!(g.edge_count(), 4);
        assert!(g.net_count() <= 4 + 2);
        // declared ports plus ground and the internal net
        assert_eq!(g.net_count(), 4);
    }

    #[test]
    fn empty_netlist_keeps_declared_ports_as_isolated_nodes() {
        let n = Netlist::empty(PortDecl::new(2, 0, 0));
        let g = netlist_to_graph(&n);
        assert_eq!(g.component_count(), 0);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.net_count(), 2);
        assert_eq!(g.net_degree(0), 0);
        assert_eq!(g.net_degree(1), 0);
    }

    #[test]
    fn edge_count_equals_sum_of_arities() {
        let reg = mos_registry((0.42, 100.0), (0.15, 100.0));
        let text = "X0 0 net_input_0 net_internal_0 0 sky130_fd_pr__nfet_01v8 w=1 l=1\n\
                    X1 net_internal_0 net_input_1 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1 l=1\n\
                    X2 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1 l=1";
        let n = parse_netlist(text, &reg, PortDecl::new(2, 1, 1)).unwrap();
        let g = netlist_to_graph(&n);
        assert_eq!(g.edge_count(), 12);
    }

    #[test]
    fn path_search_crosses_components() {
        let reg = mos_registry((0.42, 100.0), (0.15, 100.0));
        let text = "X0 net_internal_0 net_input_0 net_output_0 0 sky130_fd_pr__nfet_01v8 w=1 l=1";
        let n = parse_netlist(text, &reg, PortDecl::new(1, 1, 0)).unwrap();
        let g = netlist_to_graph(&n);
        let input = g.net_id("net_input_0").unwrap();
        let output = g.net_id("net_output_0").unwrap();
        assert!(g.nets_connected(input, output));
    }
}
