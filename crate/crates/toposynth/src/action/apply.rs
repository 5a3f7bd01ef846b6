//! Action application with symmetric-modifier expansion.

use super::masks::{addition_ok, TargetRef};
use super::{Action, Modifier};
use crate::graph::{CircuitGraph, EdgeKind, NodeId};

/// Apply the construction part of `action` to `state`.
///
/// Returns the successor state and whether the action was applied. Invalid
/// actions leave the graph untouched (`applied = false`); the terminate
/// component is ignored here, episode termination is the environment's
/// concern. Application is deterministic and atomic: either every expanded
/// edit lands or none does.
pub fn apply_action(state: &CircuitGraph, action: &Action) -> (CircuitGraph, bool) {
    let Some(target) = TargetRef::decode(state, action.target) else {
        return (state.clone(), false);
    };
    let Some(kind) = EdgeKind::from_index(action.edge_kind) else {
        return (state.clone(), false);
    };
    let Some(modifier) = Modifier::from_index(action.addition) else {
        return (state.clone(), false);
    };
    if action.source >= state.node_count()
        || !addition_ok(state, action.source, &target, kind, modifier)
    {
        return (state.clone(), false);
    }

    let mut g = state.clone();
    let source = action.source;
    perform_edits(&mut g, source, &target, kind, modifier);

    debug_assert!(crate::graph::partial_validity_ok(&g));
    debug_assert!(g.check_automorphism().is_ok(), "automorphism broken by apply");
    (g, true)
}

fn perform_edits(
    g: &mut CircuitGraph,
    source: NodeId,
    target: &TargetRef,
    kind: EdgeKind,
    modifier: Modifier,
) {
    match modifier {
        Modifier::SingleCommonMode => {
            let t = match target {
                TargetRef::Existing(v) => *v,
                TargetRef::Scaffold(k) => g.add_node(k.clone()).expect("checked addable"),
            };
            g.add_edge(source, t, kind).expect("checked addable");
        }
        Modifier::SymmetricPair => {
            let phi_src = g.symmetry().partner(source).expect("symmetric source");
            let (t, phi_t) = match target {
                TargetRef::Existing(v) => {
                    (*v, g.symmetry().partner(*v).expect("symmetric target"))
                }
                TargetRef::Scaffold(k) => {
                    g.add_symmetric_pair(k.clone()).expect("checked addable")
                }
            };
            g.add_edge(source, t, kind).expect("checked addable");
            g.add_edge(phi_src, phi_t, kind).expect("checked addable");
        }
        Modifier::SymToCommonComponent => {
            let phi_src = g.symmetry().partner(source).expect("symmetric source");
            let flip = kind.complement().expect("checked complementary kind");
            let t = match target {
                TargetRef::Existing(v) => *v,
                TargetRef::Scaffold(k) => g.add_node(k.clone()).expect("checked addable"),
            };
            g.add_edge(source, t, kind).expect("checked addable");
            g.add_edge(phi_src, t, flip).expect("checked addable");
        }
        Modifier::SymToCommonNet => {
            let phi_src = g.symmetry().partner(source).expect("symmetric source");
            let t = match target {
                TargetRef::Existing(v) => *v,
                TargetRef::Scaffold(k) => g.add_node(k.clone()).expect("checked addable"),
            };
            g.add_edge(source, t, kind).expect("checked addable");
            g.add_edge(phi_src, t, kind).expect("checked addable");
        }
        Modifier::CommonToSymmetricPair => {
            let TargetRef::Scaffold(k) = target else {
                unreachable!("checked scaffold-only modifier");
            };
            let (t, phi_t) = g.add_symmetric_pair(k.clone()).expect("checked addable");
            if g.kind(source).is_component() {
                let flip = kind.complement().expect("checked complementary kind");
                g.add_edge(source, t, kind).expect("checked addable");
                g.add_edge(source, phi_t, flip).expect("checked addable");
            } else {
                g.add_edge(t, source, kind).expect("checked addable");
                g.add_edge(phi_t, source, kind).expect("checked addable");
            }
        }
    }
}
