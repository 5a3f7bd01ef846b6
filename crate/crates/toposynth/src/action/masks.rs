//! Prefix-conditioned legality masks.
//!
//! Each head's mask is a pure function of the state and the sampled prefix.
//! A bit is set only when the choice admits at least one completing suffix,
//! so sampling under the masks can never paint itself into a corner
//! mid-action. The brute-force reference in [`super::oracle`] re-derives
//! the same decisions from raw edits plus the structural validator; the
//! two are held equal by the acceptance suite.

use thiserror::Error;

use super::{Modifier, MODIFIER_COUNT};
use crate::graph::{
    validate_structure, CircuitGraph, EdgeKind, NodeId, NodeKind, EDGE_KIND_COUNT,
    NODE_KIND_COUNT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("source {0} admits no legal action")]
    InvalidSource(usize),
    #[error("prefix admits no legal completion")]
    InvalidPrefix,
}

/// A resolved target-head choice: an existing node or a scaffold slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetRef {
    Existing(NodeId),
    Scaffold(NodeKind),
}

impl TargetRef {
    /// Decode a target-head index against a state.
    pub fn decode(g: &CircuitGraph, idx: usize) -> Option<TargetRef> {
        if idx < g.node_count() {
            Some(TargetRef::Existing(idx))
        } else {
            NodeKind::from_index(idx - g.node_count()).map(TargetRef::Scaffold)
        }
    }

    fn kind<'a>(&'a self, g: &'a CircuitGraph) -> &'a NodeKind {
        match self {
            TargetRef::Existing(v) => g.kind(*v),
            TargetRef::Scaffold(k) => k,
        }
    }

    fn is_scaffold(&self) -> bool {
        matches!(self, TargetRef::Scaffold(_))
    }
}

/// Whether a scaffold slot of this kind may add a node at all.
fn scaffold_kind_allowed(g: &CircuitGraph, kind: &NodeKind) -> bool {
    match kind {
        // IO nets are fixed by the task scaffold and never added.
        NodeKind::IoNet(_) => false,
        NodeKind::SupplyNet => g.supply().is_none(),
        NodeKind::GroundNet => g.ground().is_none(),
        _ => true,
    }
}

fn is_sym(g: &CircuitGraph, u: NodeId) -> bool {
    g.symmetry().partner(u).is_some()
}

/// Edge-kind legality before modifier selection: the kind belongs to the
/// component endpoint's device class and that terminal is free.
fn local_edge_ok(g: &CircuitGraph, source: NodeId, target: &TargetRef, kind: EdgeKind) -> bool {
    let (comp_kind, existing_comp) = if g.kind(source).is_component() {
        (g.kind(source).clone(), Some(source))
    } else {
        match target {
            TargetRef::Existing(v) => (g.kind(*v).clone(), Some(*v)),
            TargetRef::Scaffold(k) => (k.clone(), None),
        }
    };
    if !comp_kind.terminal_kinds(g.explicit_bulk()).contains(&kind) {
        return false;
    }
    if let Some(c) = existing_comp {
        if g.terminal_net(c, kind).is_some() {
            return false;
        }
    }
    true
}

/// Full applicability of a modifier given the complete construction prefix:
/// endpoint polarity, scaffold availability, terminal legality and the
/// modifier's symmetry-class predicate.
pub fn addition_ok(
    g: &CircuitGraph,
    source: NodeId,
    target: &TargetRef,
    kind: EdgeKind,
    modifier: Modifier,
) -> bool {
    if source >= g.node_count() {
        return false;
    }
    // Exactly one endpoint is a component.
    if g.kind(source).is_component() == target.kind(g).is_component() {
        return false;
    }
    match target {
        TargetRef::Existing(v) => {
            if *v >= g.node_count() || *v == source {
                return false;
            }
        }
        TargetRef::Scaffold(k) => {
            if !scaffold_kind_allowed(g, k) {
                return false;
            }
        }
    }
    if !local_edge_ok(g, source, target, kind) {
        return false;
    }
    let src_sym = is_sym(g, source);
    let src_is_comp = g.kind(source).is_component();
    let tgt_kind = target.kind(g).clone();
    match modifier {
        Modifier::SingleCommonMode => {
            if src_sym {
                return false;
            }
            match target {
                TargetRef::Existing(v) => !is_sym(g, *v),
                TargetRef::Scaffold(_) => true,
            }
        }
        Modifier::SymmetricPair => {
            if !src_sym {
                return false;
            }
            let phi_src = g.symmetry().partner(source).expect("sym source has partner");
            match target {
                TargetRef::Existing(v) => {
                    if !is_sym(g, *v) {
                        return false;
                    }
                    let phi_tgt = g.symmetry().partner(*v).expect("sym target has partner");
                    // Primary edge must be addable and so must its mirror.
                    edge_addable(g, source, *v, kind) && edge_addable(g, phi_src, phi_tgt, kind)
                }
                TargetRef::Scaffold(_) => {
                    // Two fresh nodes; only the source-side terminals can
                    // block, one on each pair member.
                    if src_is_comp {
                        free_on(g, source, kind) && free_on(g, phi_src, kind)
                    } else {
                        true
                    }
                }
            }
        }
        Modifier::SymToCommonComponent => {
            if !src_sym || src_is_comp || !tgt_kind.is_component() {
                return false;
            }
            let Some(flip) = kind.complement() else {
                return false;
            };
            match target {
                TargetRef::Existing(v) => {
                    if is_sym(g, *v) {
                        return false;
                    }
                    let phi_src = g.symmetry().partner(source).unwrap();
                    edge_addable(g, source, *v, kind)
                        && free_on(g, *v, flip)
                        && !g.has_edge(phi_src, *v, flip)
                }
                TargetRef::Scaffold(k) => k.terminal_kinds(g.explicit_bulk()).contains(&flip),
            }
        }
        Modifier::SymToCommonNet => {
            if !src_sym || !src_is_comp || !tgt_kind.is_net() {
                return false;
            }
            let phi_src = g.symmetry().partner(source).unwrap();
            match target {
                TargetRef::Existing(v) => {
                    if is_sym(g, *v) {
                        return false;
                    }
                    edge_addable(g, source, *v, kind) && edge_addable(g, phi_src, *v, kind)
                }
                TargetRef::Scaffold(_) => free_on(g, source, kind) && free_on(g, phi_src, kind),
            }
        }
        Modifier::CommonToSymmetricPair => {
            if src_sym || !target.is_scaffold() {
                return false;
            }
            if src_is_comp {
                // Same component takes the kind and its complement.
                let Some(flip) = kind.complement() else {
                    return false;
                };
                free_on(g, source, kind) && free_on(g, source, flip)
            } else {
                // Two fresh components each take `kind` onto the source net.
                true
            }
        }
    }
}

fn free_on(g: &CircuitGraph, comp: NodeId, kind: EdgeKind) -> bool {
    g.kind(comp).is_component() && g.terminal_net(comp, kind).is_none()
}

/// Whether a single concrete edge could be added right now.
fn edge_addable(g: &CircuitGraph, a: NodeId, b: NodeId, kind: EdgeKind) -> bool {
    let (comp, _net) = match (g.kind(a).is_component(), g.kind(b).is_component()) {
        (true, false) => (a, b),
        (false, true) => (b, a),
        _ => return false,
    };
    g.kind(comp).terminal_kinds(g.explicit_bulk()).contains(&kind)
        && g.terminal_net(comp, kind).is_none()
}

/// Whether any (edge kind, modifier) completion exists for the pair.
pub fn target_ok(g: &CircuitGraph, source: NodeId, target: &TargetRef) -> bool {
    (0..EDGE_KIND_COUNT).any(|ki| {
        let kind = EdgeKind::from_index(ki).unwrap();
        Modifier::ALL
            .iter()
            .any(|m| addition_ok(g, source, target, kind, *m))
    })
}

/// Head-1 mask: source must be an existing node with at least one legal
/// extension.
pub fn mask_source(g: &CircuitGraph) -> Result<Vec<bool>, MaskError> {
    if g.node_count() == 0 {
        return Err(MaskError::EmptyGraph);
    }
    Ok(g.node_ids()
        .map(|u| {
            if g.kind(u).is_net() {
                // A net can always seed a fresh component through the
                // scaffold slots (common-mode or a new symmetric pair).
                true
            } else {
                // A component extends through any free terminal toward a
                // fresh generic net.
                !g.free_terminals(u).map(|t| t.is_empty()).unwrap_or(true)
            }
        })
        .collect())
}

/// Head-2 mask over existing nodes and scaffold slots.
pub fn mask_target(g: &CircuitGraph, source: NodeId) -> Result<Vec<bool>, MaskError> {
    if source >= g.node_count() {
        return Err(MaskError::InvalidSource(source));
    }
    let mut mask = Vec::with_capacity(g.node_count() + NODE_KIND_COUNT);
    for v in g.node_ids() {
        mask.push(target_ok(g, source, &TargetRef::Existing(v)));
    }
    for j in 0..NODE_KIND_COUNT {
        let kind = NodeKind::from_index(j).unwrap();
        mask.push(target_ok(g, source, &TargetRef::Scaffold(kind)));
    }
    if mask.iter().any(|b| *b) {
        Ok(mask)
    } else {
        Err(MaskError::InvalidSource(source))
    }
}

/// Head-3 mask over edge kinds.
pub fn mask_edge_kind(
    g: &CircuitGraph,
    source: NodeId,
    target_idx: usize,
) -> Result<Vec<bool>, MaskError> {
    let target = TargetRef::decode(g, target_idx).ok_or(MaskError::InvalidPrefix)?;
    let mask: Vec<bool> = (0..EDGE_KIND_COUNT)
        .map(|ki| {
            let kind = EdgeKind::from_index(ki).unwrap();
            Modifier::ALL
                .iter()
                .any(|m| addition_ok(g, source, &target, kind, *m))
        })
        .collect();
    if mask.iter().any(|b| *b) {
        Ok(mask)
    } else {
        Err(MaskError::InvalidPrefix)
    }
}

/// Head-4 mask over the five modifiers.
pub fn mask_addition_type(
    g: &CircuitGraph,
    source: NodeId,
    target_idx: usize,
    edge_kind: usize,
) -> Result<Vec<bool>, MaskError> {
    let target = TargetRef::decode(g, target_idx).ok_or(MaskError::InvalidPrefix)?;
    let kind = EdgeKind::from_index(edge_kind).ok_or(MaskError::InvalidPrefix)?;
    let mask: Vec<bool> = Modifier::ALL
        .iter()
        .map(|m| addition_ok(g, source, &target, kind, *m))
        .collect();
    debug_assert_eq!(mask.len(), MODIFIER_COUNT);
    if mask.iter().any(|b| *b) {
        Ok(mask)
    } else {
        Err(MaskError::InvalidPrefix)
    }
}

/// Head-5 mask: `[continue allowed, terminate allowed]`. Termination
/// requires every component terminal to be bound; continuing requires a
/// legal extension and room before the step limit.
pub fn mask_terminate(g: &CircuitGraph, at_last_step: bool) -> [bool; 2] {
    let bound = validate_structure(g).all_terminals_bound;
    let can_extend = mask_source(g)
        .map(|m| m.iter().any(|b| *b))
        .unwrap_or(false);
    let cont = can_extend && !(at_last_step && bound);
    [cont, bound]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diff_pair_fixture() -> (CircuitGraph, NodeId, NodeId, NodeId, NodeId) {
        // Symmetric input nets (inp, inn), symmetric Nmos pair wired
        // gate-to-input, common-mode tail net.
        let mut g = CircuitGraph::default();
        let vdd = g.add_node(NodeKind::SupplyNet).unwrap();
        let (inp, inn) = g.add_symmetric_pair(NodeKind::GenericNet).unwrap();
        let (m1, m2) = g.add_symmetric_pair(NodeKind::Nmos).unwrap();
        let tail = g.add_node(NodeKind::GenericNet).unwrap();
        g.add_edge(m1, inp, EdgeKind::Gate).unwrap();
        g.add_edge(m2, inn, EdgeKind::Gate).unwrap();
        g.add_edge(m1, tail, EdgeKind::Source).unwrap();
        g.add_edge(m2, tail, EdgeKind::Source).unwrap();
        let _ = vdd;
        (g, inp, m1, m2, tail)
    }

    #[test]
    fn single_net_graph_sources() {
        let mut g = CircuitGraph::default();
        g.add_node(NodeKind::SupplyNet).unwrap();
        assert_eq!(mask_source(&g).unwrap(), vec![true]);
    }

    #[test]
    fn fully_wired_component_is_masked() {
        let mut g = CircuitGraph::default();
        let n1 = g.add_node(NodeKind::GenericNet).unwrap();
        let n2 = g.add_node(NodeKind::GenericNet).unwrap();
        let r = g.add_node(NodeKind::Resistor).unwrap();
        g.add_edge(r, n1, EdgeKind::PassivePlus).unwrap();
        g.add_edge(r, n2, EdgeKind::PassiveMinus).unwrap();
        let m = mask_source(&g).unwrap();
        assert_eq!(m, vec![true, true, false]);
    }

    #[test]
    fn net_targets_only_from_component_source() {
        let mut g = CircuitGraph::default();
        let n = g.add_node(NodeKind::GenericNet).unwrap();
        let vdd = g.add_node(NodeKind::SupplyNet).unwrap();
        let m = g.add_node(NodeKind::Nmos).unwrap();
        g.add_edge(m, n, EdgeKind::Gate).unwrap();
        // From a net source, existing net bits are zero.
        let tm = mask_target(&g, n).unwrap();
        assert!(!tm[vdd]);
        assert!(tm[m]); // free terminals remain on m
        // From the component, both nets are available.
        let tm = mask_target(&g, m).unwrap();
        assert!(tm[n] && tm[vdd]);
        // Scaffold supply slot masked once a supply exists.
        let scaffold_base = g.node_count();
        assert!(!tm[scaffold_base + NodeKind::SupplyNet.index()]);
        assert!(tm[scaffold_base + NodeKind::GenericNet.index()]);
        // IO slots are never addable.
        assert!(!tm[scaffold_base + 7]);
    }

    #[test]
    fn edge_mask_respects_occupancy_and_class() {
        let mut g = CircuitGraph::default();
        let n = g.add_node(NodeKind::GenericNet).unwrap();
        let n2 = g.add_node(NodeKind::GenericNet).unwrap();
        let r = g.add_node(NodeKind::Resistor).unwrap();
        g.add_edge(r, n, EdgeKind::PassivePlus).unwrap();
        let em = mask_edge_kind(&g, n2, r).unwrap();
        assert_eq!(
            em,
            vec![false, false, false, false, false, true],
            "only PassiveMinus remains"
        );
    }

    #[test]
    fn modifier_masks_by_symmetry_class() {
        let (g, inp, m1, _m2, tail) = diff_pair_fixture();
        let scaffold = |k: NodeKind| g.node_count() + k.index();

        // Common-mode net -> scaffold component: single common-mode or new
        // symmetric pair.
        let am = mask_addition_type(&g, tail, scaffold(NodeKind::Nmos), EdgeKind::Drain.index())
            .unwrap();
        assert_eq!(am, vec![true, false, false, false, true]);

        // Symmetric net -> scaffold component: symmetric pair or
        // complementary edges onto one common-mode component.
        let am = mask_addition_type(&g, inp, scaffold(NodeKind::Resistor), EdgeKind::PassivePlus.index())
            .unwrap();
        assert_eq!(am, vec![false, true, true, false, false]);

        // Symmetric component -> common-mode net: symmetric pair to common
        // net (identical kinds).
        let am = mask_addition_type(&g, m1, tail, EdgeKind::Drain.index()).unwrap();
        assert_eq!(am, vec![false, false, false, true, false]);

        // Gate kind cannot mirror onto a common-mode component.
        let am = mask_addition_type(&g, inp, scaffold(NodeKind::Nmos), EdgeKind::Gate.index())
            .unwrap();
        assert_eq!(am, vec![false, true, false, false, false]);
    }

    #[test]
    fn terminate_requires_bound_terminals() {
        let (g, ..) = diff_pair_fixture();
        // Drain terminals are still free.
        assert_eq!(mask_terminate(&g, false), [true, false]);
        let mut g2 = CircuitGraph::default();
        let n = g2.add_node(NodeKind::GenericNet).unwrap();
        let vss = g2.add_node(NodeKind::GroundNet).unwrap();
        let r = g2.add_node(NodeKind::Resistor).unwrap();
        g2.add_edge(r, n, EdgeKind::PassivePlus).unwrap();
        g2.add_edge(r, vss, EdgeKind::PassiveMinus).unwrap();
        assert_eq!(mask_terminate(&g2, false), [true, true]);
        assert_eq!(mask_terminate(&g2, true), [false, true]);
    }
}
