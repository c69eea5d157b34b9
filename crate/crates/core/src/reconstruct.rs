//! Gate dependency DAG reconstruction from recovered frames.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dag::{AltGroup, GateDag, GateNode, TilePair};
use crate::enumerate::EnumerationResult;
use crate::generator::GeneratedTrace;
use crate::layout::{Layout, TileCoord};
use crate::matcher::{find_subgraph, MatchGraph, MatchMode, MatchQuery, MatchStatus, SiteRule};
use crate::qasm::{circuit_to_dag, LogicalCircuit};
use crate::recovery::{ComponentStatus, Recovery};

/// Enumeration results keyed by (frame, component index).
pub type ComponentSolutions = BTreeMap<(usize, usize), EnumerationResult>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvableFrame {
    pub frame: usize,
    pub component: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reconstruction {
    pub dag: GateDag,
    /// Frames left out because some ambiguous component had no explanation.
    pub unresolvable: Vec<UnresolvableFrame>,
}

impl Reconstruction {
    pub fn is_complete(&self) -> bool {
        self.unresolvable.is_empty()
    }
}

/// Builds the ambiguity-augmented DAG. Every known path becomes one node;
/// every path of every solution of an ambiguous component becomes a node
/// tagged with its alternative. Edges follow per-tile histories: a node
/// depends on the nodes that last touched either of its endpoint tiles.
pub fn reconstruct_dag(recovery: &Recovery, solutions: &ComponentSolutions) -> Reconstruction {
    reconstruct_dag_with(recovery, solutions, ReconstructOptions::default())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReconstructOptions {
    /// Keep only the first solution for each distinct endpoint pairing.
    /// Covers that differ only in routing produce identical nodes, so this
    /// shrinks the DAG without losing any alternative.
    pub merge_reroutes: bool,
}

/// As [`reconstruct_dag`], with reroute merging configurable.
pub fn reconstruct_dag_with(
    recovery: &Recovery,
    solutions: &ComponentSolutions,
    options: ReconstructOptions,
) -> Reconstruction {
    let mut dag = GateDag::new();
    let mut unresolvable = Vec::new();
    let mut last: BTreeMap<TileCoord, Vec<usize>> = BTreeMap::new();

    for (fi, frame) in recovery.frames.iter().enumerate() {
        let blocked = frame.components.iter().enumerate().find(|(ci, c)| {
            c.is_ambiguous()
                && solutions
                    .get(&(fi, *ci))
                    .map_or(true, |r| r.solutions.is_empty())
        });
        if let Some((ci, _)) = blocked {
            unresolvable.push(UnresolvableFrame {
                frame: fi,
                component: ci,
            });
            continue;
        }

        // (pair, alt_group) for every node of this frame, plus which tiles
        // each component's alternatives all touch
        let mut pending: Vec<(TilePair, Option<AltGroup>)> = Vec::new();
        let mut touched_by_all: BTreeMap<TileCoord, bool> = BTreeMap::new();
        for (ci, comp) in frame.components.iter().enumerate() {
            match &comp.status {
                ComponentStatus::Known(paths) => {
                    for p in paths {
                        let pair = TilePair::new(p[0], p[p.len() - 1]);
                        pending.push((pair, None));
                        for t in pair.tiles() {
                            touched_by_all.insert(t, true);
                        }
                    }
                }
                ComponentStatus::Ambiguous => {
                    let res = &solutions[&(fi, ci)];
                    let mut per_solution: Vec<BTreeSet<TileCoord>> = Vec::new();
                    let mut seen: BTreeSet<Vec<TilePair>> = BTreeSet::new();
                    for (si, sol) in res.solutions.iter().enumerate() {
                        let mut pairing: Vec<TilePair> =
                            sol.pairs().map(|(a, b)| TilePair::new(a, b)).collect();
                        pairing.sort();
                        if !seen.insert(pairing) && options.merge_reroutes {
                            continue;
                        }
                        let mut touched = BTreeSet::new();
                        for (a, b) in sol.pairs() {
                            let group = AltGroup {
                                frame: fi,
                                component: ci,
                                solution: si,
                            };
                            pending.push((TilePair::new(a, b), Some(group)));
                            touched.insert(a);
                            touched.insert(b);
                        }
                        per_solution.push(touched);
                    }
                    let any: BTreeSet<TileCoord> = per_solution.iter().flatten().copied().collect();
                    for t in any {
                        touched_by_all.insert(t, per_solution.iter().all(|s| s.contains(&t)));
                    }
                }
            }
        }

        let mut this_frame: BTreeMap<TileCoord, Vec<usize>> = BTreeMap::new();
        for (pair, alt_group) in pending {
            let id = dag.node_count();
            dag.add_node(GateNode {
                id,
                timestep: fi,
                tiles: pair,
                alt_group,
            });
            for t in pair.tiles() {
                for &h in last.get(&t).map(Vec::as_slice).unwrap_or(&[]) {
                    dag.add_edge(h, id);
                }
                this_frame.entry(t).or_default().push(id);
            }
        }
        for (t, ids) in this_frame {
            let entry = last.entry(t).or_default();
            if touched_by_all[&t] {
                *entry = ids;
            } else {
                entry.extend(ids);
            }
        }
    }
    Reconstruction { dag, unresolvable }
}

/// Ground-truth DAG of a routed circuit in tile terms: one node per gate at
/// the timestep it ran, per-qubit dependency edges.
pub fn placed_truth_dag(
    circuit: &LogicalCircuit,
    layout: &Layout,
    routed: &GeneratedTrace,
) -> GateDag {
    let steps = routed.gate_timesteps(circuit.gates.len());
    circuit_to_dag(circuit).map_nodes(|i, g| GateNode {
        id: i,
        timestep: steps[i],
        tiles: TilePair::new(layout.qubit_tiles[g.qubit_a], layout.qubit_tiles[g.qubit_b]),
        alt_group: None,
    })
}

/// Whether `truth` embeds in `reconstructed` with every node landing on a
/// node over the same tile pair and every edge on an edge.
pub fn embed_check(truth: &GateDag, reconstructed: &GateDag) -> bool {
    let pattern = MatchGraph::from_gate_dag(truth);
    let target = MatchGraph::from_gate_dag(reconstructed);
    let query = MatchQuery {
        pattern: &pattern,
        target: &target,
        timeout: None,
        mode: MatchMode::FirstMatch,
        sites: SiteRule::Exact,
    };
    find_subgraph(&query).status == MatchStatus::Found
}
