//! Five-head hierarchical action space with prefix-conditioned masks and
//! symmetric action modifiers.
//!
//! An action is the tuple `[source, target, edge kind, addition type,
//! terminate]`. Source indexes an existing node; target indexes an existing
//! node or, for indexes at and beyond `|V|`, a scaffold slot that adds a
//! fresh node of the addressed kind. The addition type selects one of five
//! modifiers that expand the sampled edge into one or two concrete edits so
//! that the registered mirror symmetry is preserved.

mod apply;
mod masks;
pub mod oracle;

pub use apply::apply_action;
pub use masks::{
    addition_ok, mask_addition_type, mask_edge_kind, mask_source, mask_target, mask_terminate,
    target_ok, MaskError, TargetRef,
};

use serde::{Deserialize, Serialize};

use crate::graph::{CircuitGraph, NODE_KIND_COUNT};

/// Number of symmetric action modifiers (`O_types`).
pub const MODIFIER_COUNT: usize = 5;

/// The five symmetric action modifiers, in head order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modifier {
    /// Plain edit between two common-mode nodes.
    SingleCommonMode,
    /// Mirror the edit onto the symmetric counterparts of both endpoints.
    SymmetricPair,
    /// Second edge from the partner of a symmetric net onto the same
    /// common-mode component, with complementary terminal kind.
    SymToCommonComponent,
    /// Second edge from the partner of a symmetric component onto the same
    /// common-mode net, with identical kind.
    SymToCommonNet,
    /// Add a fresh symmetric pair, both members connected to the
    /// common-mode source.
    CommonToSymmetricPair,
}

impl Modifier {
    pub fn index(self) -> usize {
        match self {
            Modifier::SingleCommonMode => 0,
            Modifier::SymmetricPair => 1,
            Modifier::SymToCommonComponent => 2,
            Modifier::SymToCommonNet => 3,
            Modifier::CommonToSymmetricPair => 4,
        }
    }

    pub fn from_index(idx: usize) -> Option<Modifier> {
        match idx {
            0 => Some(Modifier::SingleCommonMode),
            1 => Some(Modifier::SymmetricPair),
            2 => Some(Modifier::SymToCommonComponent),
            3 => Some(Modifier::SymToCommonNet),
            4 => Some(Modifier::CommonToSymmetricPair),
            _ => None,
        }
    }

    pub const ALL: [Modifier; MODIFIER_COUNT] = [
        Modifier::SingleCommonMode,
        Modifier::SymmetricPair,
        Modifier::SymToCommonComponent,
        Modifier::SymToCommonNet,
        Modifier::CommonToSymmetricPair,
    ];
}

/// One sampled action. Head index ranges depend on the state the action was
/// sampled in: `source < |V|`, `target < |V| + d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub source: usize,
    pub target: usize,
    pub edge_kind: usize,
    pub addition: usize,
    pub terminate: bool,
}

impl Action {
    pub fn as_ints(&self) -> [usize; 5] {
        [
            self.source,
            self.target,
            self.edge_kind,
            self.addition,
            self.terminate as usize,
        ]
    }

    pub fn from_ints(v: [usize; 5]) -> Action {
        Action {
            source: v[0],
            target: v[1],
            edge_kind: v[2],
            addition: v[3],
            terminate: v[4] != 0,
        }
    }
}

/// Per-head masks for one sampling step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSet {
    pub source: Vec<bool>,
    pub target: Vec<bool>,
    pub edge: Vec<bool>,
    pub addition: Vec<bool>,
    pub terminate: [bool; 2],
}

impl MaskSet {
    /// Number of permitted choices per head, in head order.
    pub fn summary(&self) -> [usize; 5] {
        [
            self.source.iter().filter(|b| **b).count(),
            self.target.iter().filter(|b| **b).count(),
            self.edge.iter().filter(|b| **b).count(),
            self.addition.iter().filter(|b| **b).count(),
            self.terminate.iter().filter(|b| **b).count(),
        ]
    }
}

/// Size of the target head for a given state.
pub fn target_head_len(g: &CircuitGraph) -> usize {
    g.node_count() + NODE_KIND_COUNT
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeKind, NodeKind, EDGE_KIND_COUNT};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn seed_graph(rng: &mut ChaCha8Rng) -> CircuitGraph {
        let mut g = CircuitGraph::default();
        g.add_node(NodeKind::SupplyNet).unwrap();
        g.add_node(NodeKind::GroundNet).unwrap();
        if rng.gen_bool(0.5) {
            g.add_symmetric_pair(NodeKind::IoNet("inp".into())).unwrap();
        } else {
            g.add_node(NodeKind::IoNet("in".into())).unwrap();
        }
        g
    }

    fn pick_masked(rng: &mut ChaCha8Rng, mask: &[bool]) -> Option<usize> {
        let choices: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| i)
            .collect();
        choices.choose(rng).copied()
    }

    /// One uniformly random mask-permitted construction action.
    fn random_action(g: &CircuitGraph, rng: &mut ChaCha8Rng) -> Option<Action> {
        let src = pick_masked(rng, &mask_source(g).ok()?)?;
        let tgt = pick_masked(rng, &mask_target(g, src).ok()?)?;
        let ek = pick_masked(rng, &mask_edge_kind(g, src, tgt).ok()?)?;
        let ad = pick_masked(rng, &mask_addition_type(g, src, tgt, ek).ok()?)?;
        Some(Action {
            source: src,
            target: tgt,
            edge_kind: ek,
            addition: ad,
            terminate: false,
        })
    }

    #[test]
    fn masks_agree_with_oracle_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0usize;
        for _ in 0..40 {
            let mut g = seed_graph(&mut rng);
            for _ in 0..10 {
                // Compare full-action decisions on a random sample of tuples.
                for _ in 0..40 {
                    let src = rng.gen_range(0..g.node_count());
                    let tgt = rng.gen_range(0..target_head_len(&g));
                    let ek = rng.gen_range(0..EDGE_KIND_COUNT);
                    let ad = rng.gen_range(0..MODIFIER_COUNT);
                    let by_mask = TargetRef::decode(&g, tgt)
                        .map(|t| {
                            addition_ok(
                                &g,
                                src,
                                &t,
                                EdgeKind::from_index(ek).unwrap(),
                                Modifier::from_index(ad).unwrap(),
                            )
                        })
                        .unwrap_or(false);
                    let by_oracle = oracle::action_ok(&g, src, tgt, ek, ad);
                    assert_eq!(
                        by_mask, by_oracle,
                        "mismatch at src={src} tgt={tgt} ek={ek} ad={ad} graph={}",
                        crate::graph::to_json_line(&g)
                    );
                    checked += 1;
                }
                // Head-level masks against the exists-a-suffix oracle.
                let sm = mask_source(&g).unwrap();
                for (i, bit) in sm.iter().enumerate() {
                    assert_eq!(*bit, oracle::prefix_ok(&g, &[i]), "source head, node {i}");
                }
                let Some(a) = random_action(&g, &mut rng) else {
                    break;
                };
                let tm = mask_target(&g, a.source).unwrap();
                for (t, bit) in tm.iter().enumerate() {
                    assert_eq!(*bit, oracle::prefix_ok(&g, &[a.source, t]), "target head");
                }
                let (g2, applied) = apply_action(&g, &a);
                assert!(applied);
                g = g2;
            }
        }
        assert!(checked >= 10_000);
    }

    #[test]
    fn mask_causality_under_suffix_choices() {
        // The mask for head k is a function of the prefix only: recomputing
        // it must give the same bits regardless of later sampled heads.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut g = seed_graph(&mut rng);
        for _ in 0..15 {
            let Some(a) = random_action(&g, &mut rng) else { break };
            let em1 = mask_edge_kind(&g, a.source, a.target).unwrap();
            let em2 = mask_edge_kind(&g, a.source, a.target).unwrap();
            assert_eq!(em1, em2);
            let (g2, _) = apply_action(&g, &a);
            g = g2;
        }
    }
}
