//! Scheduling and routing of a circuit on a layout, producing ground-truth L3 traces.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{Layout, TileCoord};
use crate::qasm::{circuit_to_dag, layered_schedule, LogicalCircuit};
use crate::trace::{CellCode, Dir, Role, Trace, TraceLevel};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutedGate {
    pub gate: usize,
    pub control: TileCoord,
    pub target: TileCoord,
    /// Ordered from control to target, both included.
    pub path: Vec<TileCoord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutedStep {
    pub timestep: usize,
    pub gates: Vec<RoutedGate>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScheduleOptions {
    /// Shuffle the greedy routing order within each step with this seed.
    pub shuffle_seed: Option<u64>,
    /// Let deferred gates share a timestep with gates of later layers whose
    /// dependencies are already satisfied. Off by default: each layer
    /// completes before the next begins.
    pub interleave_layers: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RouteError {
    #[error("circuit needs {needed} qubits but the layout holds {capacity}")]
    CapacityExceeded { needed: usize, capacity: usize },
    #[error("gate {gate} between {from} and {to} cannot be routed even on an empty grid")]
    Unroutable {
        gate: usize,
        from: TileCoord,
        to: TileCoord,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedTrace {
    pub steps: Vec<RoutedStep>,
    pub trace: Trace,
}

impl GeneratedTrace {
    /// Timestep at which each gate was routed.
    pub fn gate_timesteps(&self, n_gates: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n_gates];
        for step in &self.steps {
            for g in &step.gates {
                out[g.gate] = step.timestep;
            }
        }
        out
    }
}

/// Per-tile passability cache for repeated A* queries on one layout.
struct RoutingGrid {
    rows: usize,
    cols: usize,
    routing: Vec<bool>,
}

impl RoutingGrid {
    fn new(layout: &Layout) -> Self {
        let mut routing = vec![false; layout.area()];
        for t in &layout.routing_tiles {
            if layout.contains(*t) {
                routing[layout.index(*t)] = true;
            }
        }
        Self {
            rows: layout.rows,
            cols: layout.cols,
            routing,
        }
    }

    fn idx(&self, t: TileCoord) -> usize {
        t.row * self.cols + t.col
    }

    /// A* with Manhattan heuristic and unit edge cost. Open-list ties break
    /// on lower `h`, then on row-major tile order; neighbours are expanded
    /// in row-major order and a predecessor is only replaced by a strictly
    /// shorter route.
    fn route(&self, blocked: &[bool], src: TileCoord, dst: TileCoord) -> Option<Vec<TileCoord>> {
        let n = self.rows * self.cols;
        let mut g = vec![u32::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let h = |t: TileCoord| t.manhattan(dst) as u32;
        let mut open = BinaryHeap::new();
        let s = self.idx(src);
        g[s] = 0;
        open.push(Reverse((h(src), h(src), s)));
        while let Some(Reverse((_, _, cur))) = open.pop() {
            if closed[cur] {
                continue;
            }
            closed[cur] = true;
            let cur_t = TileCoord::new(cur / self.cols, cur % self.cols);
            if cur_t == dst {
                let mut path = vec![cur_t];
                let mut at = cur;
                while parent[at] != usize::MAX {
                    at = parent[at];
                    path.push(TileCoord::new(at / self.cols, at % self.cols));
                }
                path.reverse();
                return Some(path);
            }
            for nb in cur_t.neighbors(self.rows, self.cols) {
                let ni = self.idx(nb);
                let passable = !blocked[ni] && (nb == dst || self.routing[ni]);
                if !passable || closed[ni] {
                    continue;
                }
                let cand = g[cur] + 1;
                if cand < g[ni] {
                    g[ni] = cand;
                    parent[ni] = cur;
                    let hn = h(nb);
                    open.push(Reverse((cand + hn, hn, ni)));
                }
            }
        }
        None
    }
}

/// Shortest path from `src` to `dst` whose interior tiles are unblocked routing tiles.
pub fn route_gate(
    layout: &Layout,
    blocked: &BTreeSet<TileCoord>,
    src: TileCoord,
    dst: TileCoord,
) -> Option<Vec<TileCoord>> {
    let grid = RoutingGrid::new(layout);
    let mut mask = vec![false; layout.area()];
    for t in blocked {
        if layout.contains(*t) {
            mask[layout.index(*t)] = true;
        }
    }
    grid.route(&mask, src, dst)
}

pub fn schedule_and_route(
    circuit: &LogicalCircuit,
    layout: &Layout,
) -> Result<GeneratedTrace, RouteError> {
    schedule_and_route_with(circuit, layout, &ScheduleOptions::default())
}

/// Greedy as-many-as-possible scheduling: each timestep routes pending gates
/// in order, keeping those whose path fits around the paths already placed
/// and deferring the rest.
pub fn schedule_and_route_with(
    circuit: &LogicalCircuit,
    layout: &Layout,
    options: &ScheduleOptions,
) -> Result<GeneratedTrace, RouteError> {
    if circuit.n_qubits > layout.n_qubits() {
        return Err(RouteError::CapacityExceeded {
            needed: circuit.n_qubits,
            capacity: layout.n_qubits(),
        });
    }
    let grid = RoutingGrid::new(layout);
    let mut rng = options.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let mut trace = Trace::new(TraceLevel::L3, layout.rows, layout.cols);
    let mut steps = Vec::new();

    // Ready-set bookkeeping, used when layers may interleave.
    let dag = circuit_to_dag(circuit);
    let mut missing_preds: Vec<usize> = (0..circuit.gates.len())
        .map(|g| dag.predecessors(g).len())
        .collect();

    let (mut pending, mut layers) = if options.interleave_layers {
        let ready = (0..circuit.gates.len())
            .filter(|&g| missing_preds[g] == 0)
            .collect();
        (ready, Vec::new().into_iter())
    } else {
        (Vec::new(), layered_schedule(circuit).layers.into_iter())
    };
    loop {
        if pending.is_empty() {
            match layers.next() {
                Some(layer) => pending = layer,
                None => break,
            }
        }
        pending.sort_unstable();
        if let Some(rng) = rng.as_mut() {
            pending.shuffle(rng);
        }

        let mut blocked = vec![false; layout.area()];
        let mut routed = Vec::new();
        let mut deferred = Vec::new();
        for &gid in &pending {
            let gate = &circuit.gates[gid];
            let (src, dst) = (
                layout.qubit_tiles[gate.qubit_a],
                layout.qubit_tiles[gate.qubit_b],
            );
            match grid.route(&blocked, src, dst) {
                Some(path) => {
                    for t in &path {
                        blocked[grid.idx(*t)] = true;
                    }
                    routed.push(RoutedGate {
                        gate: gid,
                        control: src,
                        target: dst,
                        path,
                    });
                }
                None => deferred.push(gid),
            }
        }
        if routed.is_empty() {
            let gid = deferred[0];
            let gate = &circuit.gates[gid];
            return Err(RouteError::Unroutable {
                gate: gid,
                from: layout.qubit_tiles[gate.qubit_a],
                to: layout.qubit_tiles[gate.qubit_b],
            });
        }
        routed.sort_by_key(|r| r.gate);

        let timestep = steps.len();
        trace
            .frames
            .push(encode_frame(layout.rows, layout.cols, &routed));
        if options.interleave_layers {
            for r in &routed {
                for &succ in dag.successors(r.gate) {
                    missing_preds[succ] -= 1;
                    if missing_preds[succ] == 0 {
                        deferred.push(succ);
                    }
                }
            }
        }
        steps.push(RoutedStep {
            timestep,
            gates: routed,
        });
        pending = deferred;
    }
    Ok(GeneratedTrace { steps, trace })
}

/// L3 frame for a set of vertex-disjoint routed paths.
pub fn encode_frame(rows: usize, cols: usize, routed: &[RoutedGate]) -> Vec<u8> {
    let mut frame = vec![0u8; rows * cols];
    for r in routed {
        let last = r.path.len() - 1;
        for (i, &t) in r.path.iter().enumerate() {
            let role = match i {
                0 => Role::Control,
                i if i == last => Role::Target,
                _ => Role::Connection,
            };
            let mut edges = 0;
            if i > 0 {
                edges |= Dir::between(t, r.path[i - 1])
                    .expect("path steps are adjacent")
                    .bit();
            }
            if i < last {
                edges |= Dir::between(t, r.path[i + 1])
                    .expect("path steps are adjacent")
                    .bit();
            }
            frame[t.row * cols + t.col] = CellCode::new(role, edges, false).0;
        }
    }
    frame
}
