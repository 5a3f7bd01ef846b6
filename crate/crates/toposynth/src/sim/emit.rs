//! Graph to netlist emission.
//!
//! Output is a subcircuit in the documented grammar: one card per
//! component, deterministic `M#`/`R#`/`C#` names in node order,
//! deterministic net names (`vdd`, `vss`, preserved IO labels, `n#` for
//! generic nets). Unit-sized devices, so no value tokens are written. In
//! auto-bulk mode the bulk pin ties to ground for NMOS and supply for PMOS.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::graph::{validate_structure, CircuitGraph, EdgeKind, NodeId, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("graph fails structural completeness: {0}")]
    IncompleteGraph(String),
}

/// Deterministic net naming for a complete graph.
pub fn net_names(g: &CircuitGraph) -> BTreeMap<NodeId, String> {
    let mut names = BTreeMap::new();
    let mut generic = 0usize;
    for u in g.node_ids() {
        match g.kind(u) {
            NodeKind::SupplyNet => {
                names.insert(u, "vdd".to_string());
            }
            NodeKind::GroundNet => {
                names.insert(u, "vss".to_string());
            }
            NodeKind::IoNet(label) => {
                names.insert(u, label.clone());
            }
            NodeKind::GenericNet => {
                generic += 1;
                names.insert(u, format!("n{generic}"));
            }
            _ => {}
        }
    }
    names
}

/// Emit a complete graph as a subcircuit netlist.
pub fn emit_netlist(g: &CircuitGraph, subckt_name: &str) -> Result<String, EmitError> {
    let report = validate_structure(g);
    if !report.complete {
        return Err(EmitError::IncompleteGraph(format!("{report:?}")));
    }
    let names = net_names(g);
    let supply = g.supply().expect("complete graph has supply");
    let ground = g.ground().expect("complete graph has ground");

    let mut io: Vec<String> = g
        .node_ids()
        .filter_map(|u| match g.kind(u) {
            NodeKind::IoNet(label) => Some(label.clone()),
            _ => None,
        })
        .collect();
    io.sort();

    let mut out = String::new();
    let mut ports = io.join(" ");
    if !ports.is_empty() {
        ports.push(' ');
    }
    writeln!(out, ".subckt {subckt_name} {ports}vdd vss").unwrap();

    let (mut m, mut r, mut c) = (0usize, 0usize, 0usize);
    for u in g.node_ids() {
        let kind = g.kind(u);
        match kind {
            NodeKind::Nmos | NodeKind::Pmos => {
                m += 1;
                let d = &names[&g.terminal_net(u, EdgeKind::Drain).unwrap()];
                let gt = &names[&g.terminal_net(u, EdgeKind::Gate).unwrap()];
                let s = &names[&g.terminal_net(u, EdgeKind::Source).unwrap()];
                let b = if g.explicit_bulk() {
                    names[&g.terminal_net(u, EdgeKind::Bulk).unwrap()].clone()
                } else if *kind == NodeKind::Nmos {
                    names[&ground].clone()
                } else {
                    names[&supply].clone()
                };
                let model = if *kind == NodeKind::Nmos { "nfet" } else { "pfet" };
                writeln!(out, "M{m} {d} {gt} {s} {b} {model}").unwrap();
            }
            NodeKind::Resistor => {
                r += 1;
                let p = &names[&g.terminal_net(u, EdgeKind::PassivePlus).unwrap()];
                let n = &names[&g.terminal_net(u, EdgeKind::PassiveMinus).unwrap()];
                writeln!(out, "R{r} {p} {n}").unwrap();
            }
            NodeKind::Capacitor => {
                c += 1;
                let p = &names[&g.terminal_net(u, EdgeKind::PassivePlus).unwrap()];
                let n = &names[&g.terminal_net(u, EdgeKind::PassiveMinus).unwrap()];
                writeln!(out, "C{c} {p} {n}").unwrap();
            }
            _ => {}
        }
    }
    writeln!(out, ".ends").unwrap();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incomplete_graph_rejected() {
        let mut g = CircuitGraph::default();
        g.add_node(NodeKind::SupplyNet).unwrap();
        assert!(matches!(
            emit_netlist(&g, "x"),
            Err(EmitError::IncompleteGraph(_))
        ));
    }

    #[test]
    fn emission_is_deterministic() {
        let g = crate::fixtures::ring_oscillator(3);
        let a = emit_netlist(&g, "ring").unwrap();
        let b = emit_netlist(&g, "ring").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("pfet").count(), 3);
        assert_eq!(a.matches("nfet").count(), 3);
    }
}
