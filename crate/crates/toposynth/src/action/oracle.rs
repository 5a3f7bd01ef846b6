//! Brute-force reference oracle for mask decisions.
//!
//! Deliberately avoids the predicate logic in [`super::masks`]: an action is
//! judged by mechanically performing its expanded edits with no legality
//! gates and then asking the structural validator and the automorphism
//! checker whether anything got worse. Slow, simple, and independent — the
//! masks are required to agree with it bit for bit.

use super::{Modifier, TargetRef};
use crate::graph::{
    validate_structure, CircuitGraph, EdgeKind, NodeId, NodeKind, EDGE_KIND_COUNT,
    NODE_KIND_COUNT,
};

/// Reference decision for one full construction action.
pub fn action_ok(
    g: &CircuitGraph,
    source: usize,
    target_idx: usize,
    edge_kind: usize,
    modifier: usize,
) -> bool {
    let Some(modifier) = Modifier::from_index(modifier) else {
        return false;
    };
    let Some(kind) = EdgeKind::from_index(edge_kind) else {
        return false;
    };
    if source >= g.node_count() {
        return false;
    }
    let Some(target) = TargetRef::decode(g, target_idx) else {
        return false;
    };
    // IO nets exist only through task scaffolds; the slot is reserved.
    if matches!(&target, TargetRef::Scaffold(NodeKind::IoNet(_))) {
        return false;
    }
    if !class_applicable(g, source, &target, modifier) {
        return false;
    }
    let Some(candidate) = force_apply(g, source, &target, kind, modifier) else {
        return false;
    };
    no_new_violation(g, &candidate)
}

/// Modifier applicability by symmetry class, re-derived from the modifier
/// definitions rather than shared with the mask code.
fn class_applicable(
    g: &CircuitGraph,
    source: NodeId,
    target: &TargetRef,
    modifier: Modifier,
) -> bool {
    let src_paired = g.symmetry().partner(source).is_some();
    let tgt_paired = |v: NodeId| g.symmetry().partner(v).is_some();
    match modifier {
        Modifier::SingleCommonMode => {
            !src_paired
                && match target {
                    TargetRef::Existing(v) => !tgt_paired(*v),
                    TargetRef::Scaffold(_) => true,
                }
        }
        Modifier::SymmetricPair => {
            src_paired
                && match target {
                    TargetRef::Existing(v) => tgt_paired(*v),
                    TargetRef::Scaffold(_) => true,
                }
        }
        Modifier::SymToCommonComponent => {
            src_paired
                && match target {
                    TargetRef::Existing(v) => !tgt_paired(*v) && g.kind(*v).is_component(),
                    TargetRef::Scaffold(k) => k.is_component(),
                }
        }
        Modifier::SymToCommonNet => {
            src_paired
                && match target {
                    TargetRef::Existing(v) => !tgt_paired(*v) && g.kind(*v).is_net(),
                    TargetRef::Scaffold(k) => k.is_net(),
                }
        }
        Modifier::CommonToSymmetricPair => {
            !src_paired && matches!(target, TargetRef::Scaffold(_))
        }
    }
}

/// Perform the expanded edits without any legality checks. Returns `None`
/// when the edits are not even expressible (no complementary kind, missing
/// partner).
fn force_apply(
    g: &CircuitGraph,
    source: NodeId,
    target: &TargetRef,
    kind: EdgeKind,
    modifier: Modifier,
) -> Option<CircuitGraph> {
    let mut out = g.clone();
    match modifier {
        Modifier::SingleCommonMode => {
            let t = match target {
                TargetRef::Existing(v) => *v,
                TargetRef::Scaffold(k) => out.force_push_node(k.clone(), true),
            };
            out.force_push_edge(source, t, kind);
        }
        Modifier::SymmetricPair => {
            let phi_src = out.symmetry().partner(source)?;
            let (t, phi_t) = match target {
                TargetRef::Existing(v) => (*v, out.symmetry().partner(*v)?),
                TargetRef::Scaffold(k) => out.force_push_pair(k.clone()),
            };
            out.force_push_edge(source, t, kind);
            out.force_push_edge(phi_src, phi_t, kind);
        }
        Modifier::SymToCommonComponent => {
            let phi_src = out.symmetry().partner(source)?;
            let flip = kind.complement()?;
            let t = match target {
                TargetRef::Existing(v) => *v,
                TargetRef::Scaffold(k) => out.force_push_node(k.clone(), true),
            };
            out.force_push_edge(source, t, kind);
            out.force_push_edge(phi_src, t, flip);
        }
        Modifier::SymToCommonNet => {
            let phi_src = out.symmetry().partner(source)?;
            let t = match target {
                TargetRef::Existing(v) => *v,
                TargetRef::Scaffold(k) => out.force_push_node(k.clone(), true),
            };
            out.force_push_edge(source, t, kind);
            out.force_push_edge(phi_src, t, kind);
        }
        Modifier::CommonToSymmetricPair => {
            let TargetRef::Scaffold(k) = target else {
                return None;
            };
            let (t, phi_t) = out.force_push_pair(k.clone());
            if out.kind(source).is_component() {
                let flip = kind.complement()?;
                out.force_push_edge(source, t, kind);
                out.force_push_edge(source, phi_t, flip);
            } else {
                out.force_push_edge(t, source, kind);
                out.force_push_edge(phi_t, source, kind);
            }
        }
    }
    Some(out)
}

/// No structural flag regressed, the mirror symmetry still holds, and the
/// graph actually changed.
fn no_new_violation(before: &CircuitGraph, after: &CircuitGraph) -> bool {
    if after.edge_count() == before.edge_count() {
        return false;
    }
    let pre = validate_structure(before);
    let post = validate_structure(after);
    let regressed = |b: bool, a: bool| b && !a;
    if regressed(pre.no_net_net_edges, post.no_net_net_edges)
        || regressed(
            pre.no_component_component_edges,
            post.no_component_component_edges,
        )
        || regressed(pre.terminal_multiplicity_ok, post.terminal_multiplicity_ok)
        || regressed(pre.legal_terminal_kinds, post.legal_terminal_kinds)
        || regressed(pre.special_nets_unique, post.special_nets_unique)
        || regressed(pre.connected, post.connected)
    {
        return false;
    }
    if before.check_automorphism().is_ok() && after.check_automorphism().is_err() {
        return false;
    }
    true
}

/// Reference decision for a prefix of length 1..=3: does any completion of
/// the remaining construction heads yield a valid action?
pub fn prefix_ok(g: &CircuitGraph, prefix: &[usize]) -> bool {
    match prefix.len() {
        1 => (0..g.node_count() + NODE_KIND_COUNT)
            .any(|t| prefix_ok(g, &[prefix[0], t])),
        2 => (0..EDGE_KIND_COUNT).any(|k| prefix_ok(g, &[prefix[0], prefix[1], k])),
        3 => (0..super::MODIFIER_COUNT)
            .any(|m| action_ok(g, prefix[0], prefix[1], prefix[2], m)),
        _ => false,
    }
}

/// Independent recomputation of the termination prerequisite: every
/// component terminal bound, checked directly against the edge list.
pub fn terminate_allowed(g: &CircuitGraph) -> bool {
    g.components().all(|c| {
        g.kind(c)
            .terminal_kinds(g.explicit_bulk())
            .iter()
            .all(|k| g.neighbors(c).any(|(_, ek)| ek == *k))
    })
}
