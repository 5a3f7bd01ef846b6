//! Anchored subgraph matching: find an embedding of a seed graph inside a
//! complete design.
//!
//! Special nets and IO nets anchor by kind and label; remaining nodes are
//! assigned by backtracking search constrained by node kinds, the edges
//! already mapped, and symmetry classes (pair members map to pair members,
//! with pairings preserved). Fixture-scale graphs only.

use std::collections::BTreeMap;

use crate::graph::{CircuitGraph, NodeId, NodeKind};

/// Map from seed node id to final node id, or `None` if the seed does not
/// embed.
pub fn find_embedding(seed: &CircuitGraph, big: &CircuitGraph) -> Option<Vec<NodeId>> {
    let n = seed.node_count();
    let mut assignment: Vec<Option<NodeId>> = vec![None; n];
    let mut used: BTreeMap<NodeId, ()> = BTreeMap::new();

    // Anchor unique nets up front.
    for u in seed.node_ids() {
        let target = match seed.kind(u) {
            NodeKind::SupplyNet => big.supply(),
            NodeKind::GroundNet => big.ground(),
            NodeKind::IoNet(label) => big.find_io(label),
            _ => continue,
        }?;
        if used.insert(target, ()).is_some() {
            return None;
        }
        assignment[u] = Some(target);
    }

    // Order the rest: BFS from anchors, leftovers by id.
    let mut order: Vec<NodeId> = Vec::new();
    let mut seen: Vec<bool> = assignment.iter().map(|a| a.is_some()).collect();
    let mut queue: Vec<NodeId> = seed.node_ids().filter(|u| seen[*u]).collect();
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        for (v, _) in seed.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                order.push(v);
                queue.push(v);
            }
        }
    }
    for u in seed.node_ids() {
        if !seen[u] {
            order.push(u);
        }
    }

    if backtrack(seed, big, &order, 0, &mut assignment, &mut used) {
        Some(assignment.into_iter().map(|a| a.unwrap()).collect())
    } else {
        None
    }
}

fn compatible(
    seed: &CircuitGraph,
    big: &CircuitGraph,
    u: NodeId,
    cand: NodeId,
    assignment: &[Option<NodeId>],
) -> bool {
    if seed.kind(u) != big.kind(cand) {
        return false;
    }
    // Symmetry class must correspond.
    let u_pair = seed.symmetry().partner(u);
    let cand_pair = big.symmetry().partner(cand);
    match (u_pair, cand_pair) {
        (Some(up), Some(cp)) => {
            if let Some(mapped) = assignment[up] {
                if mapped != cp {
                    return false;
                }
            }
        }
        (None, None) => {}
        _ => return false,
    }
    // Every already-mapped seed edge at u must exist in the big graph.
    for (v, kind) in seed.neighbors(u) {
        if let Some(mv) = assignment[v] {
            if !big.has_edge(cand, mv, kind) {
                return false;
            }
        }
    }
    true
}

fn backtrack(
    seed: &CircuitGraph,
    big: &CircuitGraph,
    order: &[NodeId],
    depth: usize,
    assignment: &mut Vec<Option<NodeId>>,
    used: &mut BTreeMap<NodeId, ()>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let u = order[depth];
    if assignment[u].is_some() {
        return backtrack(seed, big, order, depth + 1, assignment, used);
    }
    for cand in big.node_ids() {
        if used.contains_key(&cand) || !compatible(seed, big, u, cand, assignment) {
            continue;
        }
        assignment[u] = Some(cand);
        used.insert(cand, ());
        if backtrack(seed, big, order, depth + 1, assignment, used) {
            return true;
        }
        assignment[u] = None;
        used.remove(&cand);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::EdgeKind;

    #[test]
    fn ro_scaffold_embeds_in_rings() {
        let seed = fixtures::ro_scaffold();
        for stages in [3, 5, 7] {
            let big = fixtures::ring_oscillator(stages);
            let map = find_embedding(&seed, &big).expect("embedding exists");
            // Every seed edge must be realized.
            for e in seed.edges() {
                assert!(big.has_edge(map[e.a], map[e.b], e.kind));
            }
        }
    }

    #[test]
    fn ota_scaffold_embeds_with_pairs() {
        let seed = fixtures::ota_scaffold();
        let big = fixtures::ota_resistive();
        let map = find_embedding(&seed, &big).unwrap();
        let (inp_s, inn_s) = (seed.find_io("inp").unwrap(), seed.find_io("inn").unwrap());
        assert_eq!(big.symmetry().partner(map[inp_s]), Some(map[inn_s]));
    }

    #[test]
    fn incompatible_seed_rejected() {
        let mut seed = fixtures::ro_scaffold();
        // A capacitor the ring does not contain.
        let n = seed.add_node(crate::graph::NodeKind::GenericNet).unwrap();
        let c = seed.add_node(crate::graph::NodeKind::Capacitor).unwrap();
        seed.add_edge(c, n, EdgeKind::PassivePlus).unwrap();
        assert!(find_embedding(&seed, &fixtures::ring_oscillator(3)).is_none());
    }
}
