//! Expert data: netlist ingestion, trajectory decomposition and subgraph
//! sampling for cloning and discriminator training.

pub mod embed;

mod decompose;
mod netlist;

pub use decompose::{
    canonical_seed, canonical_terminate_action, decompose_canonical, decompose_to_trajectory,
    decompose_with_embedding, DecomposeError, ExpertTrajectory, TrajStep,
};
pub use netlist::{parse_netlist, NetlistError};

use std::path::Path;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::Action;
use crate::graph::{CircuitGraph, GraphJson, GraphJsonError};

#[derive(Debug, Error)]
pub enum ExpertError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {err}")]
    Netlist { path: String, err: NetlistError },
    #[error("{path}: {err}")]
    GraphJson { path: String, err: GraphJsonError },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dataset directory {0} holds no .sp/.cir/.jsonl files")]
    EmptyDataset(String),
}

/// Load every expert design under `dir`: netlists (`.sp`, `.cir`) and
/// graph-JSONL files (which may carry symmetry registries).
pub fn load_expert_graphs(dir: &Path) -> Result<Vec<(String, CircuitGraph)>, ExpertError> {
    let mut out = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .collect();
    entries.sort();
    for path in entries {
        let Some(ext) = path.extension().and_then(|e| e.to_str()) else {
            continue;
        };
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("design")
            .to_string();
        match ext {
            "sp" | "cir" => {
                let text = std::fs::read_to_string(&path)?;
                let g = parse_netlist(&text).map_err(|err| ExpertError::Netlist {
                    path: path.display().to_string(),
                    err,
                })?;
                out.push((stem, g));
            }
            "jsonl" => {
                let graphs =
                    crate::graph::read_jsonl(&path).map_err(|err| ExpertError::GraphJson {
                        path: path.display().to_string(),
                        err,
                    })?;
                for (i, g) in graphs.into_iter().enumerate() {
                    let name = g
                        .tag()
                        .map(str::to_owned)
                        .unwrap_or_else(|| format!("{stem}#{i}"));
                    out.push((name, g));
                }
            }
            _ => {}
        }
    }
    if out.is_empty() {
        return Err(ExpertError::EmptyDataset(dir.display().to_string()));
    }
    Ok(out)
}

/// Connected, structurally consistent prefixes of valid construction
/// orders of `g`.
pub fn sample_subgraphs(g: &CircuitGraph, n: usize, rng: &mut dyn RngCore) -> Vec<CircuitGraph> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let traj = match decompose_canonical("sample", g, Some(rng)) {
            Ok(t) => t,
            Err(_) => {
                out.push(g.clone());
                continue;
            }
        };
        let mut states: Vec<&CircuitGraph> = traj
            .steps
            .iter()
            .map(|s| &s.state)
            .filter(|s| s.is_connected() && s.node_count() > 0)
            .collect();
        states.push(&traj.final_graph);
        let idx = (rng.next_u64() as usize) % states.len();
        out.push(states[idx].clone());
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TrajStepJson {
    state: GraphJson,
    action: [usize; 5],
}

#[derive(Serialize, Deserialize)]
struct TrajJson {
    name: String,
    seed: GraphJson,
    steps: Vec<TrajStepJson>,
    #[serde(rename = "final")]
    final_graph: GraphJson,
}

/// Write trajectories as JSON lines.
pub fn write_trajectories(path: &Path, trajs: &[ExpertTrajectory]) -> Result<(), ExpertError> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    for t in trajs {
        let j = TrajJson {
            name: t.name.clone(),
            seed: GraphJson::from_graph(&t.seed),
            steps: t
                .steps
                .iter()
                .map(|s| TrajStepJson {
                    state: GraphJson::from_graph(&s.state),
                    action: s.action.as_ints(),
                })
                .collect(),
            final_graph: GraphJson::from_graph(&t.final_graph),
        };
        writeln!(f, "{}", serde_json::to_string(&j)?)?;
    }
    Ok(())
}

pub fn read_trajectories(path: &Path) -> Result<Vec<ExpertTrajectory>, ExpertError> {
    use std::io::BufRead;
    let f = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let j: TrajJson = serde_json::from_str(&line)?;
        let to_graph = |gj: GraphJson| {
            gj.into_graph().map_err(|err| ExpertError::GraphJson {
                path: path.display().to_string(),
                err,
            })
        };
        out.push(ExpertTrajectory {
            name: j.name,
            seed: to_graph(j.seed)?,
            steps: j
                .steps
                .into_iter()
                .map(|s| {
                    Ok(TrajStep {
                        state: to_graph(s.state)?,
                        action: Action::from_ints(s.action),
                    })
                })
                .collect::<Result<Vec<_>, ExpertError>>()?,
            final_graph: to_graph(j.final_graph)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{canonical_hash, partial_validity_ok};
    use rand::SeedableRng;

    #[test]
    fn subgraph_samples_are_valid_prefixes() {
        let g = fixtures::strongarm();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let samples = sample_subgraphs(&g, 30, &mut rng);
        assert_eq!(samples.len(), 30);
        for s in &samples {
            assert!(partial_validity_ok(s));
            assert!(s.is_connected());
            assert!(s.check_automorphism().is_ok());
        }
    }

    #[test]
    fn subgraph_samples_diverse() {
        let g = fixtures::strongarm();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let samples = sample_subgraphs(&g, 100, &mut rng);
        let mut hashes: Vec<u64> = samples.iter().map(canonical_hash).collect();
        hashes.sort_unstable();
        hashes.dedup();
        assert!(hashes.len() >= 15, "only {} distinct prefixes", hashes.len());
    }

    #[test]
    fn trajectory_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let trajs: Vec<ExpertTrajectory> = fixtures::expert_set()
            .iter()
            .take(3)
            .map(|g| decompose_canonical(g.tag().unwrap(), g, None).unwrap())
            .collect();
        let path = dir.path().join("trajs.jsonl");
        write_trajectories(&path, &trajs).unwrap();
        let back = read_trajectories(&path).unwrap();
        assert_eq!(back.len(), trajs.len());
        for (a, b) in trajs.iter().zip(&back) {
            assert_eq!(a.steps.len(), b.steps.len());
            assert_eq!(
                canonical_hash(&a.final_graph),
                canonical_hash(&b.final_graph)
            );
            let replayed = b.replay().unwrap();
            assert_eq!(
                canonical_hash(&replayed),
                canonical_hash(&a.final_graph)
            );
        }
    }

    #[test]
    fn dataset_dir_loading() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("cs.sp"),
            ".subckt cs in out vdd vss\nM1 out in vss vss nfet\nR1 vdd out\n.ends\n",
        )
        .unwrap();
        crate::graph::write_jsonl(&dir.path().join("ota.jsonl"), [&fixtures::ota_resistive()])
            .unwrap();
        let loaded = load_expert_graphs(dir.path()).unwrap();
        assert_eq!(loaded.len(), 2);
        let names: Vec<&str> = loaded.iter().map(|(n, _)| n.as_str()).collect();
        assert!(names.contains(&"cs"));
        assert!(names.contains(&"ota_resistive"));
    }
}
