//! Expert-trajectory decomposition.
//!
//! Rebuilds a complete design from a seed subgraph as a sequence of
//! mask-feasible actions. Construction is breadth-first from the seed
//! frontier with a deterministic tie-break (node-kind rank, edge kind,
//! refinement color, node id); mirrored structure is emitted through the
//! symmetric modifiers so one action covers a whole mirror orbit. A
//! randomized order is available for data augmentation and subgraph
//! sampling.

use rand::Rng;
use thiserror::Error;

use super::embed::find_embedding;
use crate::action::{
    apply_action, mask_addition_type, mask_edge_kind, mask_source, mask_target, Action, Modifier,
};
use crate::graph::{canonical_hash, wl_colors, CircuitGraph, EdgeKind, NodeId, NodeKind, SymmetryViolation};

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("seed does not embed into the target design")]
    NotASubgraph,
    #[error("target design breaks its own mirror symmetry: {0}")]
    AsymmetricInput(SymmetryViolation),
    #[error("io net `{0}` is absent from the seed; io nets cannot be added by actions")]
    UnmappedIoNet(String),
    #[error("decomposition stalled with {0} edges uncovered")]
    Stuck(usize),
    #[error("emitted action was rejected by the environment at step {0}")]
    InfeasibleStep(usize),
    #[error("replayed graph does not match the target design")]
    ReplayMismatch,
}

/// One (state, action) record.
#[derive(Debug, Clone)]
pub struct TrajStep {
    pub state: CircuitGraph,
    pub action: Action,
}

/// A decomposed expert design: replaying `steps` from `seed` reproduces
/// `final_graph`.
#[derive(Debug, Clone)]
pub struct ExpertTrajectory {
    pub name: String,
    pub seed: CircuitGraph,
    pub steps: Vec<TrajStep>,
    pub final_graph: CircuitGraph,
}

impl ExpertTrajectory {
    /// Re-apply every construction action from the seed.
    pub fn replay(&self) -> Result<CircuitGraph, DecomposeError> {
        let mut g = self.seed.clone();
        for (i, step) in self.steps.iter().enumerate() {
            if step.action.terminate {
                continue;
            }
            let (next, applied) = apply_action(&g, &step.action);
            if !applied {
                return Err(DecomposeError::InfeasibleStep(i));
            }
            g = next;
        }
        Ok(g)
    }
}

/// Seed used when none is supplied: the special and IO nets of the design,
/// classes preserved, no edges.
pub fn canonical_seed(final_g: &CircuitGraph) -> (CircuitGraph, Vec<NodeId>) {
    let mut seed = CircuitGraph::new(final_g.explicit_bulk());
    let mut map = Vec::new();
    let mut f_ids = Vec::new();
    for u in final_g.node_ids() {
        match final_g.kind(u) {
            NodeKind::SupplyNet | NodeKind::GroundNet | NodeKind::IoNet(_) => f_ids.push(u),
            _ => {}
        }
    }
    let mut placed = vec![false; f_ids.len()];
    for (i, &u) in f_ids.iter().enumerate() {
        if placed[i] {
            continue;
        }
        if let Some(p) = final_g.symmetry().partner(u) {
            let j = f_ids.iter().position(|&x| x == p).expect("partner is a net");
            let (a, b) = match (final_g.kind(u).clone(), final_g.kind(p).clone()) {
                (NodeKind::IoNet(la), NodeKind::IoNet(lb)) => seed.add_io_pair(&la, &lb),
                (ka, _) => seed.add_symmetric_pair(ka).expect("paired net"),
            };
            map.push(u);
            map.push(p);
            debug_assert_eq!(map.len(), b + 1);
            let _ = a;
            placed[i] = true;
            placed[j] = true;
        } else {
            seed.add_node(final_g.kind(u).clone()).expect("unique special nets");
            map.push(u);
            placed[i] = true;
        }
    }
    (seed, map)
}

/// Decompose with an explicit seed; the embedding is searched.
pub fn decompose_to_trajectory(
    name: &str,
    final_g: &CircuitGraph,
    seed: &CircuitGraph,
    rng: Option<&mut dyn rand::RngCore>,
) -> Result<ExpertTrajectory, DecomposeError> {
    let embedding = find_embedding(seed, final_g).ok_or(DecomposeError::NotASubgraph)?;
    decompose_with_embedding(name, final_g, seed, &embedding, rng)
}

/// Decompose from the canonical nets-only seed.
pub fn decompose_canonical(
    name: &str,
    final_g: &CircuitGraph,
    rng: Option<&mut dyn rand::RngCore>,
) -> Result<ExpertTrajectory, DecomposeError> {
    let (seed, embedding) = canonical_seed(final_g);
    decompose_with_embedding(name, final_g, &seed, &embedding, rng)
}

struct Decomposer<'a> {
    f: &'a CircuitGraph,
    colors: Vec<u64>,
    g: CircuitGraph,
    g2f: Vec<NodeId>,
    f2g: Vec<Option<NodeId>>,
    covered: Vec<bool>,
    steps: Vec<TrajStep>,
}

pub fn decompose_with_embedding(
    name: &str,
    final_g: &CircuitGraph,
    seed: &CircuitGraph,
    embedding: &[NodeId],
    mut rng: Option<&mut dyn rand::RngCore>,
) -> Result<ExpertTrajectory, DecomposeError> {
    final_g
        .check_automorphism()
        .map_err(DecomposeError::AsymmetricInput)?;
    for u in final_g.node_ids() {
        if let NodeKind::IoNet(label) = final_g.kind(u) {
            if !embedding.contains(&u) {
                return Err(DecomposeError::UnmappedIoNet(label.clone()));
            }
        }
    }

    let mut f2g = vec![None; final_g.node_count()];
    for (s, &f) in embedding.iter().enumerate() {
        f2g[f] = Some(s);
    }
    let mut d = Decomposer {
        f: final_g,
        colors: wl_colors(final_g),
        g: seed.clone(),
        g2f: embedding.to_vec(),
        f2g,
        covered: vec![false; final_g.edge_count()],
        steps: Vec::new(),
    };
    // Seed edges are already realized.
    for e in seed.edges() {
        let idx = d
            .f_edge_idx(embedding[e.a], embedding[e.b], e.kind)
            .ok_or(DecomposeError::NotASubgraph)?;
        d.covered[idx] = true;
    }

    while let Some(candidates) = d.pending_candidates() {
        let pick = match rng.as_deref_mut() {
            Some(r) => r.gen_range(0..candidates.len()),
            None => 0,
        };
        let (g_src, f_edge) = candidates[pick];
        d.emit(g_src, f_edge)?;
    }

    if d.covered.iter().any(|c| !c) {
        return Err(DecomposeError::Stuck(
            d.covered.iter().filter(|c| !**c).count(),
        ));
    }
    if canonical_hash(&d.g) != canonical_hash(final_g) {
        return Err(DecomposeError::ReplayMismatch);
    }

    // Close with the termination decision.
    let state = d.g.clone();
    let action = canonical_terminate_action(&state);
    d.steps.push(TrajStep { state, action });

    Ok(ExpertTrajectory {
        name: name.to_string(),
        seed: seed.clone(),
        steps: d.steps,
        final_graph: d.g,
    })
}

/// A feasible construction prefix paired with `terminate = 1`.
pub fn canonical_terminate_action(g: &CircuitGraph) -> Action {
    let first = |mask: &[bool]| mask.iter().position(|b| *b).unwrap_or(0);
    let src = first(&mask_source(g).unwrap_or_default());
    let tgt = mask_target(g, src).map(|m| first(&m)).unwrap_or(0);
    let ek = mask_edge_kind(g, src, tgt).map(|m| first(&m)).unwrap_or(0);
    let ad = mask_addition_type(g, src, tgt, ek).map(|m| first(&m)).unwrap_or(0);
    Action { source: src, target: tgt, edge_kind: ek, addition: ad, terminate: true }
}

impl Decomposer<'_> {
    fn f_edge_idx(&self, a: NodeId, b: NodeId, kind: EdgeKind) -> Option<usize> {
        self.f.edges().iter().position(|e| {
            e.kind == kind && ((e.a == a && e.b == b) || (e.a == b && e.b == a))
        })
    }

    fn is_sym(&self, f_node: NodeId) -> bool {
        self.f.symmetry().partner(f_node).is_some()
    }

    /// All currently emittable (source g-node, uncovered f-edge) pairs, in
    /// the canonical order.
    fn pending_candidates(&self) -> Option<Vec<(NodeId, usize)>> {
        let mut out: Vec<(NodeId, usize, (usize, usize, u64, NodeId))> = Vec::new();
        for g_src in 0..self.g.node_count() {
            let fu = self.g2f[g_src];
            for (idx, e) in self.f.edges().iter().enumerate() {
                if self.covered[idx] || (e.a != fu && e.b != fu) {
                    continue;
                }
                let fv = if e.a == fu { e.b } else { e.a };
                // Mirror-orbit partner edges are covered together, and a
                // common-mode node never drives an edit onto an existing
                // pair member; the symmetric side will emit it.
                if !self.is_sym(fu) && self.is_sym(fv) && self.f2g[fv].is_some() {
                    continue;
                }
                let key = (
                    self.f.kind(fv).index(),
                    e.kind.index(),
                    self.colors[fv],
                    fv,
                );
                out.push((g_src, idx, key));
            }
        }
        if out.is_empty() {
            return None;
        }
        out.sort_by(|x, y| (x.0, x.2).cmp(&(y.0, y.2)));
        Some(out.into_iter().map(|(s, i, _)| (s, i)).collect())
    }

    fn emit(&mut self, g_src: NodeId, f_edge: usize) -> Result<(), DecomposeError> {
        let e = self.f.edges()[f_edge];
        let fu = self.g2f[g_src];
        let fv = if e.a == fu { e.b } else { e.a };
        let kind = e.kind;
        let src_sym = self.is_sym(fu);
        let tgt_sym = self.is_sym(fv);
        let tgt_mapped = self.f2g[fv];

        let (modifier, target_idx) = match (src_sym, tgt_sym) {
            (false, false) => {
                let t = match tgt_mapped {
                    Some(gv) => gv,
                    None => self.scaffold_idx(fv),
                };
                (Modifier::SingleCommonMode, t)
            }
            (true, true) => {
                let t = match tgt_mapped {
                    Some(gv) => gv,
                    None => self.scaffold_idx(fv),
                };
                (Modifier::SymmetricPair, t)
            }
            (true, false) => {
                let m = if self.f.kind(fv).is_component() {
                    Modifier::SymToCommonComponent
                } else {
                    Modifier::SymToCommonNet
                };
                let t = match tgt_mapped {
                    Some(gv) => gv,
                    None => self.scaffold_idx(fv),
                };
                (m, t)
            }
            (false, true) => {
                debug_assert!(tgt_mapped.is_none(), "filtered in pending_candidates");
                (Modifier::CommonToSymmetricPair, self.scaffold_idx(fv))
            }
        };

        let action = Action {
            source: g_src,
            target: target_idx,
            edge_kind: kind.index(),
            addition: modifier.index(),
            terminate: false,
        };
        let before = self.g.clone();
        let (after, applied) = apply_action(&before, &action);
        if !applied {
            return Err(DecomposeError::InfeasibleStep(self.steps.len()));
        }

        // Record new-node mappings in the order apply pushes them.
        let phi_fv = self.f.symmetry().phi(fv).expect("registered");
        match modifier {
            Modifier::SingleCommonMode
            | Modifier::SymToCommonComponent
            | Modifier::SymToCommonNet => {
                if tgt_mapped.is_none() {
                    self.map_node(after.node_count() - 1, fv);
                }
            }
            Modifier::SymmetricPair | Modifier::CommonToSymmetricPair => {
                if tgt_mapped.is_none() {
                    self.map_node(after.node_count() - 2, fv);
                    self.map_node(after.node_count() - 1, phi_fv);
                }
            }
        }

        // Cover the emitted edge and its mirror-orbit partner.
        self.cover(fu, fv, kind)?;
        let phi_fu = self.f.symmetry().phi(fu).expect("registered");
        match modifier {
            Modifier::SingleCommonMode => {}
            Modifier::SymmetricPair => self.cover(phi_fu, phi_fv, kind)?,
            Modifier::SymToCommonComponent => {
                let flip = kind.complement().expect("mirrorable kind");
                self.cover(phi_fu, fv, flip)?;
            }
            Modifier::SymToCommonNet => self.cover(phi_fu, fv, kind)?,
            Modifier::CommonToSymmetricPair => {
                let mirror_kind = if self.f.kind(fu).is_component() {
                    kind.complement().expect("mirrorable kind")
                } else {
                    kind
                };
                self.cover(fu, phi_fv, mirror_kind)?;
            }
        }

        self.steps.push(TrajStep { state: before, action });
        self.g = after;
        Ok(())
    }

    fn scaffold_idx(&self, f_node: NodeId) -> usize {
        self.g.node_count() + self.f.kind(f_node).index()
    }

    fn map_node(&mut self, g_node: NodeId, f_node: NodeId) {
        debug_assert_eq!(self.g2f.len(), g_node);
        self.g2f.push(f_node);
        self.f2g[f_node] = Some(g_node);
    }

    fn cover(&mut self, a: NodeId, b: NodeId, kind: EdgeKind) -> Result<(), DecomposeError> {
        let idx = self
            .f_edge_idx(a, b, kind)
            .ok_or(DecomposeError::ReplayMismatch)?;
        self.covered[idx] = true;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn check_replay(name: &str, final_g: &CircuitGraph) -> ExpertTrajectory {
        let traj = decompose_canonical(name, final_g, None).unwrap();
        let rebuilt = traj.replay().unwrap();
        assert_eq!(
            canonical_hash(&rebuilt),
            canonical_hash(final_g),
            "{name} replay hash"
        );
        traj
    }

    #[test]
    fn all_fixtures_replay_from_canonical_seed() {
        for g in fixtures::expert_set() {
            check_replay(g.tag().unwrap_or("fixture"), &g);
        }
    }

    #[test]
    fn seed_equals_final_gives_only_terminate() {
        let g = fixtures::ring_oscillator(3);
        let traj = decompose_to_trajectory("id", &g, &g, None).unwrap();
        assert_eq!(traj.steps.len(), 1);
        assert!(traj.steps[0].action.terminate);
    }

    #[test]
    fn ring_from_task_scaffold() {
        let seed = fixtures::ro_scaffold();
        for stages in [3, 5, 7] {
            let g = fixtures::ring_oscillator(stages);
            let traj = decompose_to_trajectory("ring", &g, &seed, None).unwrap();
            let rebuilt = traj.replay().unwrap();
            assert_eq!(canonical_hash(&rebuilt), canonical_hash(&g));
            // Each extra stage is one PMOS, one NMOS and their wiring.
            assert!(traj.steps.len() >= (stages - 1) * 4);
        }
    }

    #[test]
    fn differential_pair_emitted_as_one_action() {
        let g = fixtures::ota_resistive();
        let seed = fixtures::ota_scaffold();
        let traj = decompose_to_trajectory("ota", &g, &seed, None).unwrap();
        // Two resistors, four edges, but mirrored: two construction actions
        // plus terminate.
        assert_eq!(traj.steps.len(), 3, "{:#?}", traj.steps.iter().map(|s| s.action).collect::<Vec<_>>());
        let rebuilt = traj.replay().unwrap();
        assert_eq!(canonical_hash(&rebuilt), canonical_hash(&g));
        let mods: Vec<usize> = traj.steps.iter().map(|s| s.action.addition).collect();
        assert!(mods.contains(&Modifier::SymmetricPair.index())
            || mods.contains(&Modifier::SymToCommonNet.index()));
    }

    #[test]
    fn randomized_orders_still_replay() {
        use rand::SeedableRng;
        let g = fixtures::strongarm();
        for seed in 0..5u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let traj = decompose_canonical("sa", &g, Some(&mut rng)).unwrap();
            let rebuilt = traj.replay().unwrap();
            assert_eq!(canonical_hash(&rebuilt), canonical_hash(&g));
        }
    }
}
