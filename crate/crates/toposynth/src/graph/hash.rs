//! Isomorphism-aware canonical hashing via iterated color refinement.
//!
//! Node colors start from the node kind (including IO labels) and are
//! refined by the sorted multiset of (edge kind, neighbor color) pairs.
//! The final hash combines the sorted stable colors with the graph size,
//! so isomorphic graphs collide and id permutations are invisible. It is a
//! sound but incomplete isomorphism test, which is the standard trade for
//! dedup indexes; FNV arithmetic keeps it stable across runs and builds.

use super::{CircuitGraph, NodeKind};

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv_bytes(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn fnv_u64(h: u64, v: u64) -> u64 {
    fnv_bytes(h, &v.to_le_bytes())
}

fn initial_color(kind: &NodeKind) -> u64 {
    let mut h = fnv_u64(FNV_OFFSET, kind.index() as u64);
    if let NodeKind::IoNet(label) = kind {
        h = fnv_bytes(h, label.as_bytes());
    }
    h
}

/// Stable per-node colors after refinement; isomorphic nodes in isomorphic
/// graphs share colors.
pub fn wl_colors(g: &CircuitGraph) -> Vec<u64> {
    let n = g.node_count();
    let mut colors: Vec<u64> = g.node_ids().map(|u| initial_color(g.kind(u))).collect();
    // |V| rounds always reach the stable partition; bail out early once the
    // color multiset stops changing.
    let mut prev_signature = signature(&colors);
    for _ in 0..n {
        let mut next = Vec::with_capacity(n);
        for u in g.node_ids() {
            let mut neigh: Vec<(u64, u64)> = g
                .neighbors(u)
                .map(|(v, k)| (k.index() as u64, colors[v]))
                .collect();
            neigh.sort_unstable();
            let mut h = fnv_u64(FNV_OFFSET, colors[u]);
            for (k, c) in neigh {
                h = fnv_u64(fnv_u64(h, k), c);
            }
            next.push(h);
        }
        colors = next;
        let sig = signature(&colors);
        if sig == prev_signature {
            break;
        }
        prev_signature = sig;
    }
    colors
}

/// Hash equal for isomorphic graphs, stable across runs.
pub fn canonical_hash(g: &CircuitGraph) -> u64 {
    let n = g.node_count();
    if n == 0 {
        return FNV_OFFSET;
    }
    let mut sorted = wl_colors(g);
    sorted.sort_unstable();
    let mut h = fnv_u64(FNV_OFFSET, n as u64);
    h = fnv_u64(h, g.edge_count() as u64);
    for c in sorted {
        h = fnv_u64(h, c);
    }
    h
}

fn signature(colors: &[u64]) -> u64 {
    let mut sorted = colors.to_vec();
    sorted.sort_unstable();
    let mut h = FNV_OFFSET;
    for c in sorted {
        h = fnv_u64(h, c);
    }
    h
}
