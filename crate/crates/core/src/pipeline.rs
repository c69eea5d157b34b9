//! End-to-end recovery of a gate DAG from an observed trace.

use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumerate::{
    enumerate_solutions, Budget, EnumerateError, EnumerationResult, PathSolution,
};
use crate::reconstruct::{
    reconstruct_dag_with, ComponentSolutions, ReconstructOptions, Reconstruction,
};
use crate::recovery::{h3_recover_with, Recovery, RecoveryOptions};
use crate::trace::{downgrade, Trace, TraceError, TraceLevel};

#[derive(Clone, Copy, Debug)]
pub struct RecoverOptions {
    pub recovery: RecoveryOptions,
    /// Limit for each ambiguous component's enumeration.
    pub dfs_budget: Budget,
    pub reconstruct: ReconstructOptions,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        Self {
            recovery: RecoveryOptions::default(),
            dfs_budget: Budget::default(),
            reconstruct: ReconstructOptions {
                merge_reroutes: true,
            },
        }
    }
}

impl RecoverOptions {
    pub fn with_dfs_timeout(timeout: Option<Duration>) -> Self {
        Self {
            dfs_budget: Budget {
                max_time: timeout,
                ..Budget::default()
            },
            ..Self::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum RecoverError {
    #[error("frame {frame}, component {component}: odd number of endpoints ({count})")]
    OddEndpoints {
        frame: usize,
        component: usize,
        count: usize,
    },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Everything the recovery pipeline derives from one trace.
#[derive(Clone, Debug)]
pub struct RecoverOutput {
    pub recovery: Recovery,
    pub solutions: ComponentSolutions,
    pub reconstruction: Reconstruction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoverStatus {
    Success,
    /// Some ambiguous component had no valid cover; its frame was skipped.
    UnresolvableFrame,
    /// Some enumeration hit its budget, so alternatives may be missing.
    Incomplete,
}

impl RecoverOutput {
    pub fn status(&self) -> RecoverStatus {
        if !self.reconstruction.is_complete() {
            RecoverStatus::UnresolvableFrame
        } else if self.solutions.values().any(|r| !r.stats.complete) {
            RecoverStatus::Incomplete
        } else {
            RecoverStatus::Success
        }
    }

    /// Summed enumeration time over all ambiguous components.
    pub fn dfs_total_ms(&self) -> f64 {
        self.solutions.values().map(|r| r.stats.elapsed_ms).sum()
    }

    /// Enumeration time per frame (zero for frames without ambiguity).
    pub fn dfs_ms_per_frame(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.recovery.frames.len()];
        for ((f, _), r) in &self.solutions {
            out[*f] += r.stats.elapsed_ms;
        }
        out
    }

    /// Endpoints inside ambiguous components, counted per frame and summed.
    pub fn ambiguous_endpoints(&self) -> usize {
        self.recovery
            .ambiguous_components()
            .map(|(_, _, c)| c.endpoints.len())
            .sum()
    }

    pub fn solutions_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(&solution_records(&self.solutions))
    }

    pub fn metrics(&self) -> RunMetrics {
        RunMetrics {
            status: self.status(),
            frames: self.recovery.frames.len(),
            ambiguity_pct: self.recovery.ambiguity_pct(),
            endpoint_pairing_success: true,
            ambiguous_endpoints: self.ambiguous_endpoints(),
            dfs_total_ms: self.dfs_total_ms(),
            dfs_ms_per_frame: self.dfs_ms_per_frame(),
            dag_nodes: self.reconstruction.dag.node_count(),
            dag_edges: self.reconstruction.dag.edge_count(),
            unresolvable: self.reconstruction.unresolvable.clone(),
        }
    }
}

/// Summary of one recovery run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub status: RecoverStatus,
    pub frames: usize,
    /// Ambiguous frames as a percentage of frames with any activity.
    pub ambiguity_pct: f64,
    /// False when some component had an odd endpoint count.
    pub endpoint_pairing_success: bool,
    pub ambiguous_endpoints: usize,
    pub dfs_total_ms: f64,
    pub dfs_ms_per_frame: Vec<f64>,
    pub dag_nodes: usize,
    pub dag_edges: usize,
    pub unresolvable: Vec<crate::reconstruct::UnresolvableFrame>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub frame: usize,
    pub component_id: usize,
    pub solutions: Vec<PathSolution>,
    pub stats: crate::enumerate::EnumerationStats,
}

pub fn solution_records(solutions: &ComponentSolutions) -> Vec<SolutionRecord> {
    solutions
        .iter()
        .map(|(&(frame, component_id), r)| SolutionRecord {
            frame,
            component_id,
            solutions: r.solutions.clone(),
            stats: r.stats,
        })
        .collect()
}

/// Enumerates every ambiguous component of `recovery`. Stops at the first
/// component (in frame order) with an odd endpoint count.
pub fn enumerate_all(
    recovery: &Recovery,
    budget: Budget,
) -> Result<ComponentSolutions, RecoverError> {
    let jobs: Vec<_> = recovery.ambiguous_components().collect();
    for &(frame, component, c) in &jobs {
        if c.endpoints.len() % 2 == 1 {
            return Err(RecoverError::OddEndpoints {
                frame,
                component,
                count: c.endpoints.len(),
            });
        }
    }
    let results: Vec<((usize, usize), EnumerationResult)> = jobs
        .par_iter()
        .map(
            |&(f, ci, c)| match enumerate_solutions(&c.region(), budget) {
                Ok(r) => ((f, ci), r),
                Err(EnumerateError::OddEndpointCount(_)) | Err(EnumerateError::TooLarge(_)) => {
                    unreachable!("parity checked above")
                }
            },
        )
        .collect();
    Ok(results.into_iter().collect())
}

/// Recovery from a trace at any level; L2/L3 inputs are reduced to L1 first.
pub fn recover(trace: &Trace, options: &RecoverOptions) -> Result<RecoverOutput, RecoverError> {
    let l1 = if trace.level == TraceLevel::L1 {
        trace.clone()
    } else {
        downgrade(trace, TraceLevel::L1)?
    };
    let recovery = h3_recover_with(&l1, options.recovery);
    // known components with an odd count cannot occur: a cover pairs endpoints
    let solutions = enumerate_all(&recovery, options.dfs_budget)?;
    let reconstruction = reconstruct_dag_with(&recovery, &solutions, options.reconstruct);
    Ok(RecoverOutput {
        recovery,
        solutions,
        reconstruction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::schedule_and_route;
    use crate::layout::{build_layout, LayoutKind};
    use crate::qasm::{GateKind, LogicalCircuit};
    use crate::reconstruct::{embed_check, placed_truth_dag};

    #[test]
    fn recovers_simple_circuit_on_every_layout() {
        let c = LogicalCircuit::from_pairs(
            4,
            [
                (GateKind::Cx, 0, 2),
                (GateKind::Cx, 1, 3),
                (GateKind::Cx, 0, 1),
                (GateKind::Cx, 2, 3),
            ],
        )
        .unwrap();
        for kind in LayoutKind::STANDARD {
            let l = build_layout(kind, 4).unwrap();
            let routed = schedule_and_route(&c, &l).unwrap();
            let out = recover(&routed.trace, &RecoverOptions::default()).unwrap();
            assert_eq!(out.status(), RecoverStatus::Success, "{kind}");
            assert!(
                embed_check(&placed_truth_dag(&c, &l, &routed), &out.reconstruction.dag),
                "{kind}"
            );
        }
    }

    #[test]
    fn undetected_qubits_can_mislead() {
        // on a 1×4 qubit row, qubits 1 and 2 never show up as a lone path end;
        // frame 1 (gates 1–2 and 0–3) then reads as a single snake from 0 to 3
        let c = LogicalCircuit::from_pairs(
            4,
            [
                (GateKind::Cx, 0, 1),
                (GateKind::Cx, 2, 3),
                (GateKind::Cx, 1, 2),
                (GateKind::Cx, 0, 3),
            ],
        )
        .unwrap();
        let l = build_layout(LayoutKind::Intermediate, 4).unwrap();
        let routed = schedule_and_route(&c, &l).unwrap();
        let out = recover(&routed.trace, &RecoverOptions::default()).unwrap();
        assert_eq!(out.recovery.registry.qubit_tiles.len(), 2);
        assert_eq!(out.status(), RecoverStatus::Success);
        assert!(!embed_check(
            &placed_truth_dag(&c, &l, &routed),
            &out.reconstruction.dag
        ));
    }

    #[test]
    fn odd_endpoints_halt() {
        // the middle tile of frame 1 is a known qubit tile, giving 3 endpoints
        let mut t = Trace::new(TraceLevel::L1, 1, 3);
        t.frames = vec![vec![1, 1, 0], vec![1, 1, 1]];
        let err = recover(&t, &RecoverOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            RecoverError::OddEndpoints {
                frame: 1,
                component: 0,
                count: 3
            }
        ));
    }
}
