//! Line-oriented JSON interchange for circuit graphs.
//!
//! One object per graph:
//! `{"nodes": [[id, kind], ...], "edges": [[u, v, kind], ...],
//!   "symmetry": {"pairs": [[a, b], ...], "common": [...]}, "tag": ...}`

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CircuitGraph, EdgeKind, GraphError, NodeId, NodeKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<(NodeId, NodeKind)>,
    pub edges: Vec<(NodeId, NodeId, EdgeKind)>,
    pub symmetry: SymmetryJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub explicit_bulk: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SymmetryJson {
    pub pairs: Vec<(NodeId, NodeId)>,
    pub common: Vec<NodeId>,
}

#[derive(Debug, Error)]
pub enum GraphJsonError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("node ids must be dense and in insertion order")]
    NonDenseIds,
    #[error("node {0} listed as both common-mode and paired")]
    Overlap(NodeId),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
}

impl GraphJson {
    pub fn from_graph(g: &CircuitGraph) -> GraphJson {
        GraphJson {
            nodes: g.node_ids().map(|u| (u, g.kind(u).clone())).collect(),
            edges: g.edges().iter().map(|e| (e.a, e.b, e.kind)).collect(),
            symmetry: SymmetryJson {
                pairs: g.symmetry().pairs().collect(),
                common: g.symmetry().common_nodes().collect(),
            },
            tag: g.tag().map(str::to_owned),
            explicit_bulk: g.explicit_bulk(),
        }
    }

    pub fn into_graph(self) -> Result<CircuitGraph, GraphJsonError> {
        for (i, (id, _)) in self.nodes.iter().enumerate() {
            if *id != i {
                return Err(GraphJsonError::NonDenseIds);
            }
        }
        for &(a, b) in &self.symmetry.pairs {
            if self.symmetry.common.contains(&a) {
                return Err(GraphJsonError::Overlap(a));
            }
            if self.symmetry.common.contains(&b) {
                return Err(GraphJsonError::Overlap(b));
            }
        }
        let kinds: Vec<NodeKind> = self.nodes.into_iter().map(|(_, k)| k).collect();
        Ok(CircuitGraph::from_parts(
            self.explicit_bulk,
            kinds,
            &self.edges,
            &self.symmetry.pairs,
            self.tag,
        )?)
    }
}

/// Serialize one graph to a single JSON line.
pub fn to_json_line(g: &CircuitGraph) -> String {
    serde_json::to_string(&GraphJson::from_graph(g)).expect("graph serializes")
}

/// Parse one JSON line into a graph.
pub fn from_json_line(line: &str) -> Result<CircuitGraph, GraphJsonError> {
    let parsed: GraphJson = serde_json::from_str(line)?;
    parsed.into_graph()
}

pub fn write_jsonl<'a>(
    path: &Path,
    graphs: impl IntoIterator<Item = &'a CircuitGraph>,
) -> Result<(), GraphJsonError> {
    let mut f = File::create(path)?;
    for g in graphs {
        writeln!(f, "{}", to_json_line(g))?;
    }
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<CircuitGraph>, GraphJsonError> {
    let f = File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(from_json_line(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::canonical_hash;

    #[test]
    fn round_trip_preserves_structure() {
        let mut g = CircuitGraph::default();
        let vdd = g.add_node(NodeKind::SupplyNet).unwrap();
        let (n1, n2) = g.add_symmetric_pair(NodeKind::GenericNet).unwrap();
        let io = g.add_node(NodeKind::IoNet("in".into())).unwrap();
        let r = g.add_node(NodeKind::Resistor).unwrap();
        g.add_edge(r, n1, EdgeKind::PassivePlus).unwrap();
        g.add_edge(r, n2, EdgeKind::PassiveMinus).unwrap();
        g.set_tag("fixture");
        let _ = (vdd, io);

        let line = to_json_line(&g);
        let back = from_json_line(&line).unwrap();
        assert_eq!(canonical_hash(&back), canonical_hash(&g));
        assert_eq!(back.symmetry().partner(n1), Some(n2));
        assert_eq!(back.tag(), Some("fixture"));
        assert_eq!(back.edges().len(), 2);
    }

    #[test]
    fn rejects_overlapping_registry() {
        let line = r#"{"nodes":[[0,"GenericNet"],[1,"GenericNet"]],
            "edges":[],
            "symmetry":{"pairs":[[0,1]],"common":[0]}}"#
            .replace('\n', " ");
        assert!(matches!(
            from_json_line(&line),
            Err(GraphJsonError::Overlap(0))
        ));
    }
}
