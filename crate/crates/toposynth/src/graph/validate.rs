//! Structural-validity oracle.
//!
//! Recomputes every constraint from the raw node and edge lists, without
//! going through the incremental checks in `add_edge` or the action masks.
//! This keeps it usable as an independent reference when testing the
//! masking logic.

use super::{CircuitGraph, EdgeKind, NodeId};
use std::collections::BTreeSet;

/// Findings of a full structural check. `complete` is the conjunction of
/// all other flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidityReport {
    pub all_terminals_bound: bool,
    pub connected: bool,
    pub no_net_net_edges: bool,
    pub no_component_component_edges: bool,
    pub terminal_multiplicity_ok: bool,
    pub legal_terminal_kinds: bool,
    pub special_nets_unique: bool,
    pub supply_present: bool,
    pub ground_present: bool,
    pub supply_ground_path: bool,
    pub complete: bool,
}

/// Check every structural constraint on `g` and report the findings.
pub fn validate_structure(g: &CircuitGraph) -> ValidityReport {
    let n = g.node_count();
    let mut no_net_net = true;
    let mut no_comp_comp = true;
    let mut multiplicity_ok = true;
    let mut legal_kinds = true;

    let mut seen_terminals: BTreeSet<(NodeId, EdgeKind)> = BTreeSet::new();
    for e in g.edges() {
        let a_comp = g.kind(e.a).is_component();
        let b_comp = g.kind(e.b).is_component();
        match (a_comp, b_comp) {
            (false, false) => no_net_net = false,
            (true, true) => no_comp_comp = false,
            _ => {
                let comp = if a_comp { e.a } else { e.b };
                if !g
                    .kind(comp)
                    .terminal_kinds(g.explicit_bulk())
                    .contains(&e.kind)
                {
                    legal_kinds = false;
                }
                if !seen_terminals.insert((comp, e.kind)) {
                    multiplicity_ok = false;
                }
            }
        }
    }

    let all_terminals_bound = g.components().all(|c| {
        g.kind(c)
            .terminal_kinds(g.explicit_bulk())
            .iter()
            .all(|k| seen_terminals.contains(&(c, *k)))
    });

    let connected = g.is_connected() && n > 0;
    let supply_count = g.node_ids().filter(|&u| g.kind(u) == &crate::graph::NodeKind::SupplyNet).count();
    let ground_count = g.node_ids().filter(|&u| g.kind(u) == &crate::graph::NodeKind::GroundNet).count();
    let special_nets_unique = supply_count <= 1 && ground_count <= 1;
    let supply_present = supply_count >= 1;
    let ground_present = ground_count >= 1;
    let supply_ground_path = match (g.supply(), g.ground()) {
        (Some(s), Some(gr)) => conduction_path_exists(g, s, gr, None, false),
        _ => false,
    };

    let complete = all_terminals_bound
        && connected
        && no_net_net
        && no_comp_comp
        && multiplicity_ok
        && legal_kinds
        && special_nets_unique
        && supply_present
        && ground_present
        && supply_ground_path;

    ValidityReport {
        all_terminals_bound,
        connected,
        no_net_net_edges: no_net_net,
        no_component_component_edges: no_comp_comp,
        terminal_multiplicity_ok: multiplicity_ok,
        legal_terminal_kinds: legal_kinds,
        special_nets_unique,
        supply_present,
        ground_present,
        supply_ground_path,
        complete,
    }
}

/// Partial validity for scaffolds and intermediate states: edge shape and
/// terminal multiplicity hold, but terminals may be unbound and supply
/// coverage is not required.
pub fn partial_validity_ok(g: &CircuitGraph) -> bool {
    let r = validate_structure(g);
    r.no_net_net_edges
        && r.no_component_component_edges
        && r.terminal_multiplicity_ok
        && r.legal_terminal_kinds
        && r.special_nets_unique
}

/// Whether a conduction path (through MOS drain-source channels and passive
/// bodies, not gates or bulk ties) joins `from` and `to`. `skip_comp`
/// excludes one component from the search, which turns the query into
/// "does a path exist through that component". With `dc_only`, capacitors
/// do not conduct.
pub fn conduction_path_exists(
    g: &CircuitGraph,
    from: NodeId,
    to: NodeId,
    skip_comp: Option<NodeId>,
    dc_only: bool,
) -> bool {
    // BFS over nets; a component is traversable net-to-net through its
    // conduction terminals.
    let mut seen = vec![false; g.node_count()];
    let mut queue = vec![from];
    seen[from] = true;
    while let Some(net) = queue.pop() {
        if net == to {
            return true;
        }
        for (comp, kind) in g.neighbors(net) {
            if Some(comp) == skip_comp || !is_conduction_terminal(kind) {
                continue;
            }
            if dc_only && *g.kind(comp) == crate::graph::NodeKind::Capacitor {
                continue;
            }
            for (other_net, kind2) in g.neighbors(comp) {
                if other_net == net && kind2 == kind {
                    continue;
                }
                if !is_conduction_terminal(kind2) || seen[other_net] {
                    continue;
                }
                seen[other_net] = true;
                queue.push(other_net);
            }
        }
    }
    false
}

fn is_conduction_terminal(kind: EdgeKind) -> bool {
    matches!(
        kind,
        EdgeKind::Drain | EdgeKind::Source | EdgeKind::PassivePlus | EdgeKind::PassiveMinus
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeKind;

    fn inverter_chain(stages: usize, close_ring: bool) -> CircuitGraph {
        let mut g = CircuitGraph::default();
        let vdd = g.add_node(NodeKind::SupplyNet).unwrap();
        let vss = g.add_node(NodeKind::GroundNet).unwrap();
        let mut nets = Vec::new();
        for _ in 0..stages {
            nets.push(g.add_node(NodeKind::GenericNet).unwrap());
        }
        for i in 0..stages {
            let input = nets[i];
            let output = if i + 1 < stages {
                nets[i + 1]
            } else if close_ring {
                nets[0]
            } else {
                g.add_node(NodeKind::GenericNet).unwrap()
            };
            let p = g.add_node(NodeKind::Pmos).unwrap();
            let n = g.add_node(NodeKind::Nmos).unwrap();
            g.add_edge(p, input, EdgeKind::Gate).unwrap();
            g.add_edge(p, vdd, EdgeKind::Source).unwrap();
            g.add_edge(p, output, EdgeKind::Drain).unwrap();
            g.add_edge(n, input, EdgeKind::Gate).unwrap();
            g.add_edge(n, vss, EdgeKind::Source).unwrap();
            g.add_edge(n, output, EdgeKind::Drain).unwrap();
        }
        g
    }

    #[test]
    fn ring_fixture_is_complete() {
        let g = inverter_chain(3, true);
        let r = validate_structure(&g);
        assert!(r.complete, "{r:?}");
    }

    #[test]
    fn missing_gate_edge_detected() {
        let mut g = inverter_chain(3, true);
        // Drop one gate edge: nodes 5/6 are the first stage's P/N pair.
        let (comp, net, kind) = {
            let e = g
                .edges()
                .iter()
                .find(|e| e.kind == EdgeKind::Gate)
                .copied()
                .unwrap();
            (e.a, e.b, e.kind)
        };
        g.remove_edge(comp, net, kind).unwrap();
        let r = validate_structure(&g);
        assert!(!r.all_terminals_bound);
        assert!(!r.complete);
    }

    #[test]
    fn missing_supply_detected() {
        let mut g = CircuitGraph::default();
        let n = g.add_node(NodeKind::GenericNet).unwrap();
        let gnd = g.add_node(NodeKind::GroundNet).unwrap();
        let r = g.add_node(NodeKind::Resistor).unwrap();
        g.add_edge(r, n, EdgeKind::PassivePlus).unwrap();
        g.add_edge(r, gnd, EdgeKind::PassiveMinus).unwrap();
        let report = validate_structure(&g);
        assert!(!report.supply_present);
        assert!(report.ground_present);
        assert!(!report.complete);
    }

    #[test]
    fn gate_only_coupling_is_not_a_conduction_path() {
        let mut g = CircuitGraph::default();
        let vdd = g.add_node(NodeKind::SupplyNet).unwrap();
        let vss = g.add_node(NodeKind::GroundNet).unwrap();
        let mid = g.add_node(NodeKind::GenericNet).unwrap();
        let m = g.add_node(NodeKind::Nmos).unwrap();
        g.add_edge(m, vdd, EdgeKind::Drain).unwrap();
        g.add_edge(m, mid, EdgeKind::Gate).unwrap();
        g.add_edge(m, vss, EdgeKind::Source).unwrap();
        assert!(conduction_path_exists(&g, vdd, vss, None, false));
        assert!(!conduction_path_exists(&g, vdd, mid, None, false));
        assert!(!conduction_path_exists(&g, vdd, vss, Some(m), false));
    }
}
