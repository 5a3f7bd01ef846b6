//! Typed graph representation of a (partial) circuit topology.
//!
//! A circuit is a bipartite-by-construction graph: every edge joins exactly
//! one *component* node (transistor, resistor, capacitor) and one *net* node
//! (generic, supply, ground, or labelled IO). The edge kind names the
//! component terminal that lands on the net. A [`SymmetryRegistry`] tracks
//! which nodes form mirrored pairs across the supply-ground axis and which
//! lie on it.

mod hash;
mod json;
mod validate;

pub use hash::{canonical_hash, wl_colors};
pub use json::{from_json_line, read_jsonl, to_json_line, write_jsonl, GraphJson, GraphJsonError};
pub use validate::{
    conduction_path_exists, partial_validity_ok, validate_structure, ValidityReport,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node identifier assigned in insertion order.
pub type NodeId = usize;

/// Number of node kinds in the default vocabulary (one-hot dimension `d`).
pub const NODE_KIND_COUNT: usize = 8;
/// Number of edge kinds (one-hot dimension `b`).
pub const EDGE_KIND_COUNT: usize = 6;

/// Node vocabulary. `IoNet` carries a label (e.g. "in", "outp") but occupies
/// a single slot in the one-hot encoding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Nmos,
    Pmos,
    Resistor,
    Capacitor,
    GenericNet,
    SupplyNet,
    GroundNet,
    IoNet(String),
}

impl NodeKind {
    /// Index used for one-hot features and scaffold-target addressing.
    pub fn index(&self) -> usize {
        match self {
            NodeKind::Nmos => 0,
            NodeKind::Pmos => 1,
            NodeKind::Resistor => 2,
            NodeKind::Capacitor => 3,
            NodeKind::GenericNet => 4,
            NodeKind::SupplyNet => 5,
            NodeKind::GroundNet => 6,
            NodeKind::IoNet(_) => 7,
        }
    }

    /// The kind addressed by scaffold slot `idx`. IO nets are never addable
    /// through the scaffold, so slot 7 yields an unlabeled placeholder that
    /// masks always reject.
    pub fn from_index(idx: usize) -> Option<NodeKind> {
        match idx {
            0 => Some(NodeKind::Nmos),
            1 => Some(NodeKind::Pmos),
            2 => Some(NodeKind::Resistor),
            3 => Some(NodeKind::Capacitor),
            4 => Some(NodeKind::GenericNet),
            5 => Some(NodeKind::SupplyNet),
            6 => Some(NodeKind::GroundNet),
            7 => Some(NodeKind::IoNet(String::new())),
            _ => None,
        }
    }

    pub fn is_component(&self) -> bool {
        matches!(
            self,
            NodeKind::Nmos | NodeKind::Pmos | NodeKind::Resistor | NodeKind::Capacitor
        )
    }

    pub fn is_net(&self) -> bool {
        !self.is_component()
    }

    pub fn is_mos(&self) -> bool {
        matches!(self, NodeKind::Nmos | NodeKind::Pmos)
    }

    pub fn is_passive(&self) -> bool {
        matches!(self, NodeKind::Resistor | NodeKind::Capacitor)
    }

    /// Terminal kinds of this device class. Empty for nets.
    pub fn terminal_kinds(&self, explicit_bulk: bool) -> &'static [EdgeKind] {
        match self {
            NodeKind::Nmos | NodeKind::Pmos => {
                if explicit_bulk {
                    &[EdgeKind::Gate, EdgeKind::Drain, EdgeKind::Source, EdgeKind::Bulk]
                } else {
                    &[EdgeKind::Gate, EdgeKind::Drain, EdgeKind::Source]
                }
            }
            NodeKind::Resistor | NodeKind::Capacitor => {
                &[EdgeKind::PassivePlus, EdgeKind::PassiveMinus]
            }
            _ => &[],
        }
    }
}

/// Edge vocabulary: the component terminal an edge represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Gate,
    Drain,
    Source,
    Bulk,
    PassivePlus,
    PassiveMinus,
}

impl EdgeKind {
    pub fn index(&self) -> usize {
        match self {
            EdgeKind::Gate => 0,
            EdgeKind::Drain => 1,
            EdgeKind::Source => 2,
            EdgeKind::Bulk => 3,
            EdgeKind::PassivePlus => 4,
            EdgeKind::PassiveMinus => 5,
        }
    }

    pub fn from_index(idx: usize) -> Option<EdgeKind> {
        match idx {
            0 => Some(EdgeKind::Gate),
            1 => Some(EdgeKind::Drain),
            2 => Some(EdgeKind::Source),
            3 => Some(EdgeKind::Bulk),
            4 => Some(EdgeKind::PassivePlus),
            5 => Some(EdgeKind::PassiveMinus),
            _ => None,
        }
    }

    /// Terminal paired with this one when an edge is mirrored onto the same
    /// common-mode component: (D,S) for transistors, (P+,P-) for passives.
    pub fn complement(&self) -> Option<EdgeKind> {
        match self {
            EdgeKind::Drain => Some(EdgeKind::Source),
            EdgeKind::Source => Some(EdgeKind::Drain),
            EdgeKind::PassivePlus => Some(EdgeKind::PassiveMinus),
            EdgeKind::PassiveMinus => Some(EdgeKind::PassivePlus),
            EdgeKind::Gate | EdgeKind::Bulk => None,
        }
    }
}

/// An undirected incidence between one component terminal and one net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub kind: EdgeKind,
}

/// Symmetry bookkeeping: a fixed-point-free involution over paired nodes
/// plus the set of common-mode nodes. Every node in a graph is registered
/// in exactly one of the two.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryRegistry {
    pair: BTreeMap<NodeId, NodeId>,
    common: BTreeSet<NodeId>,
}

impl SymmetryRegistry {
    pub fn register_common(&mut self, u: NodeId) {
        self.common.insert(u);
    }

    pub fn register_pair(&mut self, a: NodeId, b: NodeId) {
        debug_assert_ne!(a, b);
        self.pair.insert(a, b);
        self.pair.insert(b, a);
    }

    pub fn is_common(&self, u: NodeId) -> bool {
        self.common.contains(&u)
    }

    pub fn partner(&self, u: NodeId) -> Option<NodeId> {
        self.pair.get(&u).copied()
    }

    pub fn is_registered(&self, u: NodeId) -> bool {
        self.common.contains(&u) || self.pair.contains_key(&u)
    }

    /// Image of `u` under the mirror involution: its partner for pair
    /// members, itself for common-mode nodes.
    pub fn phi(&self, u: NodeId) -> Option<NodeId> {
        if self.common.contains(&u) {
            Some(u)
        } else {
            self.pair.get(&u).copied()
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.pair.iter().filter(|(a, b)| *a < b).map(|(a, b)| (*a, *b))
    }

    pub fn common_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.common.iter().copied()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("a {0:?} node already exists")]
    DuplicateSpecialNet(NodeKind),
    #[error("edge would join two net nodes ({0}, {1})")]
    NetNetEdge(NodeId, NodeId),
    #[error("edge would join two component nodes ({0}, {1})")]
    ComponentComponentEdge(NodeId, NodeId),
    #[error("terminal {kind:?} of component {comp} is already connected")]
    TerminalOccupied { comp: NodeId, kind: EdgeKind },
    #[error("terminal {kind:?} is not legal on a {comp_kind:?}")]
    IllegalTerminalKind { comp_kind: NodeKind, kind: EdgeKind },
    #[error("node {0} is not a component")]
    NotAComponent(NodeId),
    #[error("node {0} is not registered in the symmetry registry")]
    UnregisteredNode(NodeId),
    #[error("node id {0} out of range")]
    NodeOutOfRange(NodeId),
    #[error("edge ({0}, {1}, {2:?}) not found")]
    EdgeNotFound(NodeId, NodeId, EdgeKind),
}

/// A partially or fully constructed circuit. Value type: cloning yields an
/// independent graph; all mutation goes through the methods below.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGraph {
    nodes: Vec<NodeKind>,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
    symmetry: SymmetryRegistry,
    tag: Option<String>,
    explicit_bulk: bool,
}

impl Default for CircuitGraph {
    fn default() -> Self {
        Self::new(false)
    }
}

impl CircuitGraph {
    pub fn new(explicit_bulk: bool) -> Self {
        CircuitGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            incident: Vec::new(),
            symmetry: SymmetryRegistry::default(),
            tag: None,
            explicit_bulk,
        }
    }

    pub fn explicit_bulk(&self) -> bool {
        self.explicit_bulk
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn set_tag(&mut self, tag: impl Into<String>) {
        self.tag = Some(tag.into());
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kind(&self, u: NodeId) -> &NodeKind {
        &self.nodes[u]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn symmetry(&self) -> &SymmetryRegistry {
        &self.symmetry
    }

    /// Register an existing pair directly; used when loading serialized
    /// graphs and by scaffold builders.
    pub fn register_pair(&mut self, a: NodeId, b: NodeId) -> Result<(), GraphError> {
        if a >= self.nodes.len() || a == b {
            return Err(GraphError::NodeOutOfRange(a));
        }
        if b >= self.nodes.len() {
            return Err(GraphError::NodeOutOfRange(b));
        }
        self.symmetry.register_pair(a, b);
        Ok(())
    }

    /// Rebuild a graph from raw parts. Nodes listed in `pairs` become pair
    /// members; every other node is registered common-mode. Edge legality
    /// and special-net uniqueness are re-validated.
    pub fn from_parts(
        explicit_bulk: bool,
        kinds: Vec<NodeKind>,
        edges: &[(NodeId, NodeId, EdgeKind)],
        pairs: &[(NodeId, NodeId)],
        tag: Option<String>,
    ) -> Result<CircuitGraph, GraphError> {
        let mut g = CircuitGraph::new(explicit_bulk);
        g.tag = tag;
        let mut paired = vec![false; kinds.len()];
        for &(a, b) in pairs {
            if a >= kinds.len() || a == b {
                return Err(GraphError::NodeOutOfRange(a));
            }
            if b >= kinds.len() {
                return Err(GraphError::NodeOutOfRange(b));
            }
            paired[a] = true;
            paired[b] = true;
        }
        for kind in kinds {
            g.check_special(&kind)?;
            let id = g.push_node(kind);
            if !paired[id] {
                g.symmetry.register_common(id);
            }
        }
        for &(a, b) in pairs {
            g.symmetry.register_pair(a, b);
        }
        for &(u, v, kind) in edges {
            g.add_edge(u, v, kind)?;
        }
        Ok(g)
    }

    /// Append a common-mode node of the given kind.
    pub fn add_node(&mut self, kind: NodeKind) -> Result<NodeId, GraphError> {
        self.check_special(&kind)?;
        let id = self.push_node(kind);
        self.symmetry.register_common(id);
        Ok(id)
    }

    /// Append two nodes of the same kind registered as a symmetric pair.
    pub fn add_symmetric_pair(&mut self, kind: NodeKind) -> Result<(NodeId, NodeId), GraphError> {
        if matches!(kind, NodeKind::SupplyNet | NodeKind::GroundNet) {
            return Err(GraphError::DuplicateSpecialNet(kind));
        }
        let a = self.push_node(kind.clone());
        let b = self.push_node(kind);
        self.symmetry.register_pair(a, b);
        Ok((a, b))
    }

    /// Append a mirrored pair of IO nets with their own labels.
    pub fn add_io_pair(&mut self, a: &str, b: &str) -> (NodeId, NodeId) {
        let x = self.push_node(NodeKind::IoNet(a.into()));
        let y = self.push_node(NodeKind::IoNet(b.into()));
        self.symmetry.register_pair(x, y);
        (x, y)
    }

    /// Node id of the IO net with this label.
    pub fn find_io(&self, label: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|k| matches!(k, NodeKind::IoNet(l) if l == label))
    }

    fn check_special(&self, kind: &NodeKind) -> Result<(), GraphError> {
        if matches!(kind, NodeKind::SupplyNet | NodeKind::GroundNet)
            && self.nodes.iter().any(|k| k == kind)
        {
            return Err(GraphError::DuplicateSpecialNet(kind.clone()));
        }
        Ok(())
    }

    fn push_node(&mut self, kind: NodeKind) -> NodeId {
        self.nodes.push(kind);
        self.incident.push(Vec::new());
        self.nodes.len() - 1
    }

    /// Connect terminal `kind` of the component endpoint to the net
    /// endpoint. Exactly one of `u`, `v` must be a component.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, kind: EdgeKind) -> Result<(), GraphError> {
        let (comp, _net) = self.classify_endpoints(u, v)?;
        let comp_kind = self.nodes[comp].clone();
        if !comp_kind.terminal_kinds(self.explicit_bulk).contains(&kind) {
            return Err(GraphError::IllegalTerminalKind { comp_kind, kind });
        }
        if self.terminal_net(comp, kind).is_some() {
            return Err(GraphError::TerminalOccupied { comp, kind });
        }
        let idx = self.edges.len();
        self.edges.push(Edge { a: u, b: v, kind });
        self.incident[u].push(idx);
        self.incident[v].push(idx);
        Ok(())
    }

    /// Remove one edge; utility for fixtures and tests, not an agent action.
    pub fn remove_edge(&mut self, u: NodeId, v: NodeId, kind: EdgeKind) -> Result<(), GraphError> {
        let pos = self
            .edges
            .iter()
            .position(|e| e.kind == kind && ((e.a == u && e.b == v) || (e.a == v && e.b == u)))
            .ok_or(GraphError::EdgeNotFound(u, v, kind))?;
        self.edges.remove(pos);
        self.rebuild_incidence();
        Ok(())
    }

    fn rebuild_incidence(&mut self) {
        for inc in &mut self.incident {
            inc.clear();
        }
        for (idx, e) in self.edges.iter().enumerate() {
            self.incident[e.a].push(idx);
            self.incident[e.b].push(idx);
        }
    }

    fn classify_endpoints(&self, u: NodeId, v: NodeId) -> Result<(NodeId, NodeId), GraphError> {
        if u >= self.nodes.len() {
            return Err(GraphError::NodeOutOfRange(u));
        }
        if v >= self.nodes.len() {
            return Err(GraphError::NodeOutOfRange(v));
        }
        match (self.nodes[u].is_component(), self.nodes[v].is_component()) {
            (true, false) => Ok((u, v)),
            (false, true) => Ok((v, u)),
            (false, false) => Err(GraphError::NetNetEdge(u, v)),
            (true, true) => Err(GraphError::ComponentComponentEdge(u, v)),
        }
    }

    /// Append a node bypassing special-net uniqueness; reference-oracle
    /// support only.
    pub(crate) fn force_push_node(&mut self, kind: NodeKind, common: bool) -> NodeId {
        let id = self.push_node(kind);
        if common {
            self.symmetry.register_common(id);
        }
        id
    }

    /// Append two nodes registered as a pair, bypassing checks.
    pub(crate) fn force_push_pair(&mut self, kind: NodeKind) -> (NodeId, NodeId) {
        let a = self.force_push_node(kind.clone(), false);
        let b = self.force_push_node(kind, false);
        self.symmetry.register_pair(a, b);
        (a, b)
    }

    /// Append an edge with no legality checks; reference-oracle support.
    pub(crate) fn force_push_edge(&mut self, a: NodeId, b: NodeId, kind: EdgeKind) {
        let idx = self.edges.len();
        self.edges.push(Edge { a, b, kind });
        self.incident[a].push(idx);
        self.incident[b].push(idx);
    }

    /// The net a component terminal is wired to, if any.
    pub fn terminal_net(&self, comp: NodeId, kind: EdgeKind) -> Option<NodeId> {
        self.incident[comp].iter().find_map(|&idx| {
            let e = &self.edges[idx];
            if e.kind != kind {
                return None;
            }
            let other = if e.a == comp { e.b } else { e.a };
            // Only count edges where `comp` is the component endpoint.
            if self.nodes[comp].is_component() && self.nodes[other].is_net() {
                Some(other)
            } else {
                None
            }
        })
    }

    /// Terminal kinds of component `u` with no incident edge yet.
    pub fn free_terminals(&self, u: NodeId) -> Result<BTreeSet<EdgeKind>, GraphError> {
        if u >= self.nodes.len() {
            return Err(GraphError::NodeOutOfRange(u));
        }
        if !self.nodes[u].is_component() {
            return Err(GraphError::NotAComponent(u));
        }
        Ok(self.nodes[u]
            .terminal_kinds(self.explicit_bulk)
            .iter()
            .copied()
            .filter(|&k| self.terminal_net(u, k).is_none())
            .collect())
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId, kind: EdgeKind) -> bool {
        self.incident[u].iter().any(|&idx| {
            let e = &self.edges[idx];
            e.kind == kind && ((e.a == u && e.b == v) || (e.a == v && e.b == u))
        })
    }

    /// Neighbors of `u` with the connecting edge kind (with multiplicity).
    pub fn neighbors(&self, u: NodeId) -> impl Iterator<Item = (NodeId, EdgeKind)> + '_ {
        self.incident[u].iter().map(move |&idx| {
            let e = &self.edges[idx];
            let other = if e.a == u { e.b } else { e.a };
            (other, e.kind)
        })
    }

    pub fn components(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, k)| k.is_component())
            .map(|(i, _)| i)
    }

    pub fn nets(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, k)| k.is_net())
            .map(|(i, _)| i)
    }

    pub fn find_kind(&self, kind: &NodeKind) -> Option<NodeId> {
        self.nodes.iter().position(|k| k == kind)
    }

    pub fn supply(&self) -> Option<NodeId> {
        self.find_kind(&NodeKind::SupplyNet)
    }

    pub fn ground(&self) -> Option<NodeId> {
        self.find_kind(&NodeKind::GroundNet)
    }

    /// Mirror image of `u`: its partner for pair members, `None` for
    /// common-mode nodes.
    pub fn mirror(&self, u: NodeId) -> Result<Option<NodeId>, GraphError> {
        if u >= self.nodes.len() {
            return Err(GraphError::NodeOutOfRange(u));
        }
        if self.symmetry.is_common(u) {
            Ok(None)
        } else {
            self.symmetry
                .partner(u)
                .map(Some)
                .ok_or(GraphError::UnregisteredNode(u))
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for (v, _) in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.nodes.len()
    }

    /// Expected kind of the mirror image of an edge under the registry
    /// involution. The kind flips to its complement exactly when the
    /// component endpoint is common-mode and the net endpoint is a pair
    /// member (the mirrored edge reuses the same component); in every other
    /// case the image keeps the original kind.
    pub fn mirrored_edge_kind(&self, e: &Edge) -> Option<EdgeKind> {
        let (comp, net) = if self.nodes[e.a].is_component() {
            (e.a, e.b)
        } else {
            (e.b, e.a)
        };
        let comp_common = self.symmetry.is_common(comp);
        let net_common = self.symmetry.is_common(net);
        if comp_common && !net_common {
            e.kind.complement()
        } else {
            Some(e.kind)
        }
    }

    /// Verify that the registry involution extends to a graph automorphism
    /// fixing common-mode nodes (checked edge by edge).
    pub fn check_automorphism(&self) -> Result<(), SymmetryViolation> {
        for u in 0..self.nodes.len() {
            if !self.symmetry.is_registered(u) {
                return Err(SymmetryViolation::Unregistered(u));
            }
            if self.symmetry.is_common(u) && self.symmetry.partner(u).is_some() {
                return Err(SymmetryViolation::DoublyRegistered(u));
            }
            if let Some(p) = self.symmetry.partner(u) {
                if p == u {
                    return Err(SymmetryViolation::SelfPaired(u));
                }
                if self.symmetry.partner(p) != Some(u) {
                    return Err(SymmetryViolation::NotInvolution(u, p));
                }
                if self.nodes[p] != self.nodes[u]
                    && !(matches!(self.nodes[p], NodeKind::IoNet(_))
                        && matches!(self.nodes[u], NodeKind::IoNet(_)))
                {
                    return Err(SymmetryViolation::KindMismatch(u, p));
                }
            }
        }
        for e in &self.edges {
            let mu = self.symmetry.phi(e.a).ok_or(SymmetryViolation::Unregistered(e.a))?;
            let mv = self.symmetry.phi(e.b).ok_or(SymmetryViolation::Unregistered(e.b))?;
            let expected = self
                .mirrored_edge_kind(e)
                .ok_or(SymmetryViolation::NoMirrorKind(e.a, e.b, e.kind))?;
            if !self.has_edge(mu, mv, expected) {
                return Err(SymmetryViolation::MissingMirrorEdge {
                    edge: (e.a, e.b, e.kind),
                    expected: (mu, mv, expected),
                });
            }
        }
        Ok(())
    }
}

/// Why an automorphism check failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymmetryViolation {
    #[error("node {0} not registered")]
    Unregistered(NodeId),
    #[error("node {0} registered both common-mode and paired")]
    DoublyRegistered(NodeId),
    #[error("node {0} paired with itself")]
    SelfPaired(NodeId),
    #[error("pair ({0}, {1}) is not an involution")]
    NotInvolution(NodeId, NodeId),
    #[error("pair ({0}, {1}) joins different node kinds")]
    KindMismatch(NodeId, NodeId),
    #[error("edge ({0}, {1}, {2:?}) has no legal mirror kind")]
    NoMirrorKind(NodeId, NodeId, EdgeKind),
    #[error("mirror of edge {edge:?} missing: expected {expected:?}")]
    MissingMirrorEdge {
        edge: (NodeId, NodeId, EdgeKind),
        expected: (NodeId, NodeId, EdgeKind),
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_node_base_case() {
        let mut g = CircuitGraph::default();
        let id = g.add_node(NodeKind::SupplyNet).unwrap();
        assert_eq!(id, 0);
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn duplicate_supply_rejected() {
        let mut g = CircuitGraph::default();
        g.add_node(NodeKind::SupplyNet).unwrap();
        assert_eq!(
            g.add_node(NodeKind::SupplyNet),
            Err(GraphError::DuplicateSpecialNet(NodeKind::SupplyNet))
        );
    }

    #[test]
    fn edge_polarity_checks() {
        let mut g = CircuitGraph::default();
        let vdd = g.add_node(NodeKind::SupplyNet).unwrap();
        let n = g.add_node(NodeKind::GenericNet).unwrap();
        let m = g.add_node(NodeKind::Nmos).unwrap();
        let m2 = g.add_node(NodeKind::Nmos).unwrap();
        assert!(matches!(
            g.add_edge(vdd, n, EdgeKind::Gate),
            Err(GraphError::NetNetEdge(_, _))
        ));
        assert!(matches!(
            g.add_edge(m, m2, EdgeKind::Gate),
            Err(GraphError::ComponentComponentEdge(_, _))
        ));
        g.add_edge(m, n, EdgeKind::Gate).unwrap();
        assert!(matches!(
            g.add_edge(m, vdd, EdgeKind::Gate),
            Err(GraphError::TerminalOccupied { .. })
        ));
        assert!(matches!(
            g.add_edge(m, vdd, EdgeKind::PassivePlus),
            Err(GraphError::IllegalTerminalKind { .. })
        ));
    }

    #[test]
    fn free_terminals_round_trip() {
        let mut g = CircuitGraph::default();
        let n = g.add_node(NodeKind::GenericNet).unwrap();
        let m = g.add_node(NodeKind::Nmos).unwrap();
        let r = g.add_node(NodeKind::Resistor).unwrap();
        let fresh: Vec<_> = g.free_terminals(m).unwrap().into_iter().collect();
        assert_eq!(fresh, vec![EdgeKind::Gate, EdgeKind::Drain, EdgeKind::Source]);
        g.add_edge(r, n, EdgeKind::PassivePlus).unwrap();
        assert_eq!(
            g.free_terminals(r).unwrap().into_iter().collect::<Vec<_>>(),
            vec![EdgeKind::PassiveMinus]
        );
        let before = g.free_terminals(m).unwrap();
        g.add_edge(m, n, EdgeKind::Drain).unwrap();
        g.remove_edge(m, n, EdgeKind::Drain).unwrap();
        assert_eq!(g.free_terminals(m).unwrap(), before);
        assert!(matches!(g.free_terminals(n), Err(GraphError::NotAComponent(_))));
    }

    #[test]
    fn explicit_bulk_changes_terminals() {
        let mut g = CircuitGraph::new(true);
        let m = g.add_node(NodeKind::Nmos).unwrap();
        assert_eq!(g.free_terminals(m).unwrap().len(), 4);
        let n = g.add_node(NodeKind::GenericNet).unwrap();
        g.add_edge(m, n, EdgeKind::Bulk).unwrap();
        assert_eq!(g.free_terminals(m).unwrap().len(), 3);
    }

    #[test]
    fn bulk_rejected_in_auto_mode() {
        let mut g = CircuitGraph::default();
        let m = g.add_node(NodeKind::Nmos).unwrap();
        let n = g.add_node(NodeKind::GenericNet).unwrap();
        assert!(matches!(
            g.add_edge(m, n, EdgeKind::Bulk),
            Err(GraphError::IllegalTerminalKind { .. })
        ));
    }

    #[test]
    fn mirror_involution() {
        let mut g = CircuitGraph::default();
        let vdd = g.add_node(NodeKind::SupplyNet).unwrap();
        let (a, b) = g.add_symmetric_pair(NodeKind::GenericNet).unwrap();
        assert_eq!(g.mirror(a).unwrap(), Some(b));
        assert_eq!(g.mirror(b).unwrap(), Some(a));
        assert_eq!(g.mirror(vdd).unwrap(), None);
    }

    #[test]
    fn automorphism_flip_rule() {
        // Symmetric net pair bridged by a common-mode resistor: kinds must
        // be complementary on the two edges.
        let mut g = CircuitGraph::default();
        let (n1, n2) = g.add_symmetric_pair(NodeKind::GenericNet).unwrap();
        let r = g.add_node(NodeKind::Resistor).unwrap();
        g.add_edge(r, n1, EdgeKind::PassivePlus).unwrap();
        g.add_edge(r, n2, EdgeKind::PassiveMinus).unwrap();
        g.check_automorphism().unwrap();
        // A gate edge from a common-mode device to one pair member has no
        // complementary mirror kind.
        let mut bad = CircuitGraph::default();
        let (m1, m2) = bad.add_symmetric_pair(NodeKind::GenericNet).unwrap();
        let _ = m2;
        let t = bad.add_node(NodeKind::Nmos).unwrap();
        bad.add_edge(t, m1, EdgeKind::Gate).unwrap();
        assert!(matches!(
            bad.check_automorphism(),
            Err(SymmetryViolation::NoMirrorKind(..))
        ));
    }

    #[test]
    fn automorphism_symmetric_pair_same_kind() {
        // Two paired transistors wired to a common-mode tail net share the
        // same edge kind.
        let mut g = CircuitGraph::default();
        let tail = g.add_node(NodeKind::GenericNet).unwrap();
        let (m1, m2) = g.add_symmetric_pair(NodeKind::Nmos).unwrap();
        g.add_edge(m1, tail, EdgeKind::Source).unwrap();
        g.add_edge(m2, tail, EdgeKind::Source).unwrap();
        g.check_automorphism().unwrap();
        g.remove_edge(m2, tail, EdgeKind::Source).unwrap();
        assert!(matches!(
            g.check_automorphism(),
            Err(SymmetryViolation::MissingMirrorEdge { .. })
        ));
    }
}
