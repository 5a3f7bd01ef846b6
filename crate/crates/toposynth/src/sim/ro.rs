//! Closed-form ring-oscillator evaluator.
//!
//! Looks for an odd-length cycle of complementary inverter stages between
//! the rails. A stage is a PMOS/NMOS pair sharing gate (input) and drain
//! (output) nets, sourced at supply and ground respectively. An odd ring of
//! N stages oscillates at `1 / (2 N t_inv)` with 50% duty for matched
//! stages; anything else does not oscillate in this model.

use std::collections::BTreeMap;

use super::{EvaluatorSpec, SimResult};
use crate::graph::{CircuitGraph, EdgeKind, NodeId, NodeKind};

/// Detect inverter stages: map from input net to output nets.
fn inverter_edges(g: &CircuitGraph) -> Vec<(NodeId, NodeId)> {
    let (Some(vdd), Some(vss)) = (g.supply(), g.ground()) else {
        return Vec::new();
    };
    let mut edges = Vec::new();
    for p in g.components() {
        if *g.kind(p) != NodeKind::Pmos {
            continue;
        }
        let (Some(pd), Some(pg), Some(ps)) = (
            g.terminal_net(p, EdgeKind::Drain),
            g.terminal_net(p, EdgeKind::Gate),
            g.terminal_net(p, EdgeKind::Source),
        ) else {
            continue;
        };
        if ps != vdd {
            continue;
        }
        for n in g.components() {
            if *g.kind(n) != NodeKind::Nmos {
                continue;
            }
            let (Some(nd), Some(ng), Some(ns)) = (
                g.terminal_net(n, EdgeKind::Drain),
                g.terminal_net(n, EdgeKind::Gate),
                g.terminal_net(n, EdgeKind::Source),
            ) else {
                continue;
            };
            if ns == vss && ng == pg && nd == pd {
                edges.push((pg, pd));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Length of the shortest odd directed cycle, if any.
fn shortest_odd_cycle(edges: &[(NodeId, NodeId)]) -> Option<usize> {
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
    }
    let mut best: Option<usize> = None;
    for &start in adj.keys() {
        // BFS over (node, parity) states.
        let mut dist: BTreeMap<(NodeId, bool), usize> = BTreeMap::new();
        let mut queue = std::collections::VecDeque::new();
        dist.insert((start, false), 0);
        queue.push_back((start, false));
        while let Some((u, parity)) = queue.pop_front() {
            let d = dist[&(u, parity)];
            if let Some(next) = adj.get(&u) {
                for &v in next {
                    let np = !parity;
                    if v == start && np {
                        let len = d + 1;
                        if best.map(|b| len < b).unwrap_or(true) {
                            best = Some(len);
                        }
                        continue;
                    }
                    if !dist.contains_key(&(v, np)) {
                        dist.insert((v, np), d + 1);
                        queue.push_back((v, np));
                    }
                }
            }
        }
    }
    best
}

/// Evaluate the oscillation frequency and duty cycle of a ring.
pub fn evaluate_analytic_ro(g: &CircuitGraph, spec: &EvaluatorSpec) -> SimResult {
    let edges = inverter_edges(g);
    let Some(n) = shortest_odd_cycle(&edges) else {
        return SimResult::invalid("no odd inverter ring found");
    };
    let freq = 1.0 / (2.0 * n as f64 * spec.t_inv);
    SimResult::valid([
        ("frequency".to_string(), freq),
        ("duty".to_string(), 50.0),
        ("stages".to_string(), n as f64),
    ])
    .with_unit("frequency", "Hz")
    .with_unit("duty", "%")
}
