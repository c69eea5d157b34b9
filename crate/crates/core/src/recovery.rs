//! Recovery of annotated frames from a bare activity (L1) trace.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dag::TilePair;
use crate::enumerate::{enumerate_solutions, Budget, Region};
use crate::layout::TileCoord;
use crate::trace::{CellCode, Dir, Role, Trace, TraceLevel};

/// One frame reduced to busy/free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryFrame {
    pub rows: usize,
    pub cols: usize,
    pub active: Vec<bool>,
}

impl BinaryFrame {
    pub fn from_trace(trace: &Trace, frame: usize) -> Self {
        let active = trace.frames[frame].iter().map(|&v| v != 0).collect();
        Self {
            rows: trace.rows,
            cols: trace.cols,
            active,
        }
    }

    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let active = rows
            .iter()
            .flat_map(|r| r.iter().map(|&v| v != 0))
            .collect();
        Self {
            rows: rows.len(),
            cols,
            active,
        }
    }

    pub fn is_active(&self, t: TileCoord) -> bool {
        self.active[t.row * self.cols + t.col]
    }

    pub fn active_tiles(&self) -> impl Iterator<Item = TileCoord> + '_ {
        let cols = self.cols;
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(move |(i, _)| TileCoord::new(i / cols, i % cols))
    }

    pub fn active_degree(&self, t: TileCoord) -> usize {
        t.neighbors(self.rows, self.cols)
            .filter(|&n| self.is_active(n))
            .count()
    }
}

/// Every pair of 4-adjacent active tiles. Over-approximates the true
/// merge edges whenever unrelated paths run side by side.
pub fn h1_active_edges(frame: &BinaryFrame) -> BTreeSet<TilePair> {
    let mut edges = BTreeSet::new();
    for t in frame.active_tiles() {
        for d in [Dir::East, Dir::South] {
            if let Some(n) = d.step(t, frame.rows, frame.cols) {
                if frame.is_active(n) {
                    edges.insert(TilePair::new(t, n));
                }
            }
        }
    }
    edges
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EndpointDetection {
    /// Active tiles with exactly one active neighbour.
    pub endpoints: BTreeSet<TileCoord>,
    /// Active tiles with no active neighbour; never treated as endpoints.
    pub isolated: BTreeSet<TileCoord>,
}

/// Degree-1 active tiles. A path interior always has two active path
/// neighbours, so anything found here terminates some path.
pub fn h2_detect_endpoints(frame: &BinaryFrame) -> EndpointDetection {
    let mut out = EndpointDetection::default();
    for t in frame.active_tiles() {
        match frame.active_degree(t) {
            0 => {
                out.isolated.insert(t);
            }
            1 => {
                out.endpoints.insert(t);
            }
            _ => {}
        }
    }
    out
}

/// Tiles believed to host logical qubits, accumulated over the whole trace.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointRegistry {
    pub qubit_tiles: BTreeSet<TileCoord>,
}

impl EndpointRegistry {
    pub fn contains(&self, t: TileCoord) -> bool {
        self.qubit_tiles.contains(&t)
    }

    pub fn absorb(&mut self, tiles: impl IntoIterator<Item = TileCoord>) {
        self.qubit_tiles.extend(tiles);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "paths", rename_all = "snake_case")]
pub enum ComponentStatus {
    /// Exactly one explanation; paths run between endpoints and cover the component.
    Known(Vec<Vec<TileCoord>>),
    Ambiguous,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub tiles: BTreeSet<TileCoord>,
    pub endpoints: BTreeSet<TileCoord>,
    pub status: ComponentStatus,
}

impl Component {
    pub fn region(&self) -> Region {
        Region {
            tiles: self.tiles.clone(),
            endpoints: self.endpoints.clone(),
        }
    }

    pub fn is_ambiguous(&self) -> bool {
        self.status == ComponentStatus::Ambiguous
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredFrame {
    /// Row-major L3 cell codes.
    pub cells: Vec<u8>,
    /// Connected active regions, ordered by their smallest tile.
    pub components: Vec<Component>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecoveryOptions {
    /// Confirm each greedy decomposition is the only cover before calling
    /// it known; otherwise it is reported ambiguous.
    pub certify: bool,
    /// Search cap for the confirmation; hitting it leaves the component ambiguous.
    pub certify_expansions: u64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            certify: true,
            certify_expansions: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recovery {
    pub rows: usize,
    pub cols: usize,
    pub registry: EndpointRegistry,
    pub frames: Vec<RecoveredFrame>,
}

#[derive(Serialize, Deserialize)]
struct ComponentRecord {
    frame: usize,
    component_id: usize,
    tiles: Vec<TileCoord>,
    endpoints: Vec<TileCoord>,
    #[serde(flatten)]
    status: ComponentStatus,
}

impl Recovery {
    /// The recovered trace at L3, with reserved codes on ambiguous tiles.
    pub fn to_trace(&self) -> Trace {
        let mut t = Trace::new(TraceLevel::L3, self.rows, self.cols);
        t.frames = self.frames.iter().map(|f| f.cells.clone()).collect();
        t
    }

    /// Sidecar listing every component of every frame.
    pub fn components_json(&self) -> serde_json::Result<String> {
        let records: Vec<ComponentRecord> = self
            .frames
            .iter()
            .enumerate()
            .flat_map(|(fi, f)| {
                f.components
                    .iter()
                    .enumerate()
                    .map(move |(ci, c)| ComponentRecord {
                        frame: fi,
                        component_id: ci,
                        tiles: c.tiles.iter().copied().collect(),
                        endpoints: c.endpoints.iter().copied().collect(),
                        status: c.status.clone(),
                    })
            })
            .collect();
        serde_json::to_string(&records)
    }

    pub fn ambiguous_components(&self) -> impl Iterator<Item = (usize, usize, &Component)> {
        self.frames.iter().enumerate().flat_map(|(fi, f)| {
            f.components
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_ambiguous())
                .map(move |(ci, c)| (fi, ci, c))
        })
    }

    /// Share of non-empty frames holding at least one ambiguous component, in percent.
    pub fn ambiguity_pct(&self) -> f64 {
        let busy = self
            .frames
            .iter()
            .filter(|f| !f.components.is_empty())
            .count();
        if busy == 0 {
            return 0.0;
        }
        let amb = self
            .frames
            .iter()
            .filter(|f| f.components.iter().any(Component::is_ambiguous))
            .count();
        100.0 * amb as f64 / busy as f64
    }
}

pub fn h3_recover(trace: &Trace) -> Recovery {
    h3_recover_with(trace, RecoveryOptions::default())
}

/// Builds the endpoint registry from degree-1 tiles of every frame, then
/// splits each frame into components and decomposes each one into paths
/// where that can be done unambiguously.
pub fn h3_recover_with(trace: &Trace, options: RecoveryOptions) -> Recovery {
    let binary: Vec<BinaryFrame> = (0..trace.len())
        .map(|f| BinaryFrame::from_trace(trace, f))
        .collect();
    let registry = binary
        .par_iter()
        .map(|f| h2_detect_endpoints(f).endpoints)
        .reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    let registry = EndpointRegistry {
        qubit_tiles: registry,
    };
    let frames = binary
        .par_iter()
        .map(|f| recover_frame(f, &registry, options))
        .collect();
    Recovery {
        rows: trace.rows,
        cols: trace.cols,
        registry,
        frames,
    }
}

fn recover_frame(
    frame: &BinaryFrame,
    registry: &EndpointRegistry,
    options: RecoveryOptions,
) -> RecoveredFrame {
    let mut cells = vec![0u8; frame.rows * frame.cols];
    let mut components = Vec::new();
    for tiles in connected_components(frame) {
        let endpoints: BTreeSet<TileCoord> = tiles
            .iter()
            .copied()
            .filter(|&t| registry.contains(t))
            .collect();
        let mut status = ComponentStatus::Ambiguous;
        if tiles.len() > 1 {
            if let Some(paths) = greedy_decompose(&tiles, &endpoints) {
                if !options.certify
                    || is_unique_cover(&tiles, &endpoints, options.certify_expansions)
                {
                    status = ComponentStatus::Known(paths);
                }
            }
        }
        match &status {
            ComponentStatus::Known(paths) => {
                for p in paths {
                    let last = p.len() - 1;
                    for (i, &t) in p.iter().enumerate() {
                        let mut edges = 0;
                        if i > 0 {
                            edges |= Dir::between(t, p[i - 1]).expect("adjacent").bit();
                        }
                        if i < last {
                            edges |= Dir::between(t, p[i + 1]).expect("adjacent").bit();
                        }
                        let role = if i == 0 || i == last {
                            Role::Target
                        } else {
                            Role::Connection
                        };
                        cells[t.row * frame.cols + t.col] = CellCode::new(role, edges, false).0;
                    }
                }
            }
            ComponentStatus::Ambiguous => {
                for &t in &tiles {
                    let code = if endpoints.contains(&t) {
                        CellCode::AMBIGUOUS_ENDPOINT
                    } else {
                        CellCode::AMBIGUOUS_WIRE
                    };
                    cells[t.row * frame.cols + t.col] = code.0;
                }
            }
        }
        components.push(Component {
            tiles,
            endpoints,
            status,
        });
    }
    RecoveredFrame { cells, components }
}

/// 4-connected groups of active tiles, in row-major order of their first tile.
pub fn connected_components(frame: &BinaryFrame) -> Vec<BTreeSet<TileCoord>> {
    let mut seen = vec![false; frame.active.len()];
    let mut out = Vec::new();
    for start in frame.active_tiles() {
        if seen[start.row * frame.cols + start.col] {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen[start.row * frame.cols + start.col] = true;
        while let Some(t) = queue.pop_front() {
            comp.insert(t);
            for n in t.neighbors(frame.rows, frame.cols) {
                let i = n.row * frame.cols + n.col;
                if frame.active[i] && !seen[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Endpoint-to-endpoint reachability through unused wire tiles. Adjacent
/// endpoints are linked directly.
fn constricted_graph(
    remaining: &BTreeSet<TileCoord>,
    endpoints: &BTreeSet<TileCoord>,
) -> BTreeMap<TileCoord, BTreeSet<TileCoord>> {
    let mut graph = BTreeMap::new();
    for &e in endpoints.iter().filter(|e| remaining.contains(e)) {
        let mut linked = BTreeSet::new();
        let mut seen = BTreeSet::from([e]);
        let mut queue = VecDeque::from([e]);
        while let Some(t) = queue.pop_front() {
            for n in adjacent_in(t, remaining) {
                if !seen.insert(n) {
                    continue;
                }
                if endpoints.contains(&n) {
                    linked.insert(n);
                } else {
                    queue.push_back(n);
                }
            }
        }
        graph.insert(e, linked);
    }
    graph
}

fn adjacent_in(t: TileCoord, set: &BTreeSet<TileCoord>) -> impl Iterator<Item = TileCoord> + '_ {
    let up = t.row.checked_sub(1).map(|r| TileCoord::new(r, t.col));
    let left = t.col.checked_sub(1).map(|c| TileCoord::new(t.row, c));
    let right = Some(TileCoord::new(t.row, t.col + 1));
    let down = Some(TileCoord::new(t.row + 1, t.col));
    [up, left, right, down]
        .into_iter()
        .flatten()
        .filter(move |n| set.contains(n))
}

/// Shortest route from `a` to `b` over non-endpoint tiles of `remaining`.
fn bfs_path(
    a: TileCoord,
    b: TileCoord,
    remaining: &BTreeSet<TileCoord>,
    endpoints: &BTreeSet<TileCoord>,
) -> Option<Vec<TileCoord>> {
    let mut parent: BTreeMap<TileCoord, TileCoord> = BTreeMap::new();
    let mut queue = VecDeque::from([a]);
    parent.insert(a, a);
    while let Some(t) = queue.pop_front() {
        for n in adjacent_in(t, remaining) {
            if parent.contains_key(&n) || (endpoints.contains(&n) && n != b) {
                continue;
            }
            parent.insert(n, t);
            if n == b {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(n);
        }
    }
    None
}

/// Repeatedly pairs the first endpoint with a single possible partner and
/// removes the shortest route between them. Gives up when no endpoint is
/// forced or when tiles are left over.
pub fn greedy_decompose(
    tiles: &BTreeSet<TileCoord>,
    endpoints: &BTreeSet<TileCoord>,
) -> Option<Vec<Vec<TileCoord>>> {
    let mut remaining = tiles.clone();
    let mut paths = Vec::new();
    loop {
        let graph = constricted_graph(&remaining, endpoints);
        if graph.is_empty() {
            break;
        }
        let (&e, partners) = graph.iter().find(|(_, p)| p.len() == 1)?;
        let f = *partners.iter().next().expect("one partner");
        let path = bfs_path(e, f, &remaining, endpoints)?;
        for t in &path {
            remaining.remove(t);
        }
        paths.push(path);
    }
    remaining.is_empty().then(|| {
        for p in &mut paths {
            if p.first() > p.last() {
                p.reverse();
            }
        }
        paths.sort();
        paths
    })
}

fn is_unique_cover(
    tiles: &BTreeSet<TileCoord>,
    endpoints: &BTreeSet<TileCoord>,
    max_expansions: u64,
) -> bool {
    let region = Region {
        tiles: tiles.clone(),
        endpoints: endpoints.clone(),
    };
    let budget = Budget {
        max_solutions: Some(2),
        max_expansions: Some(max_expansions),
        ..Budget::default()
    };
    match enumerate_solutions(&region, budget) {
        Ok(res) => res.stats.complete && res.solutions.len() == 1,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(r: usize, c: usize) -> TileCoord {
        TileCoord::new(r, c)
    }

    fn trace_of(frames: &[&[&[u8]]]) -> Trace {
        let mut tr = Trace::new(TraceLevel::L1, frames[0].len(), frames[0][0].len());
        for f in frames {
            tr.frames
                .push(f.iter().flat_map(|r| r.iter().copied()).collect());
        }
        tr
    }

    #[test]
    fn h1_examples() {
        let f = BinaryFrame::from_rows(&[&[1, 1], &[0, 1]]);
        let want: BTreeSet<_> = [
            TilePair::new(t(0, 0), t(0, 1)),
            TilePair::new(t(0, 1), t(1, 1)),
        ]
        .into();
        assert_eq!(h1_active_edges(&f), want);
        assert!(h1_active_edges(&BinaryFrame::from_rows(&[&[1, 0], &[0, 1]])).is_empty());
        assert_eq!(
            h1_active_edges(&BinaryFrame::from_rows(&[&[1, 1], &[1, 1]])).len(),
            4
        );
    }

    #[test]
    fn h2_examples() {
        let strip = h2_detect_endpoints(&BinaryFrame::from_rows(&[&[1, 1, 1]]));
        assert_eq!(strip.endpoints, [t(0, 0), t(0, 2)].into());
        let square = h2_detect_endpoints(&BinaryFrame::from_rows(&[&[1, 1], &[1, 1]]));
        assert!(square.endpoints.is_empty());
        let lone = h2_detect_endpoints(&BinaryFrame::from_rows(&[&[0, 1, 0]]));
        assert!(lone.endpoints.is_empty());
        assert_eq!(lone.isolated, [t(0, 1)].into());
    }

    #[test]
    fn registry_carries_across_frames() {
        // frame 0 reveals (0,1) as an endpoint; in frame 1 it has two active neighbours
        let tr = trace_of(&[
            &[&[0, 1, 1, 1], &[0, 0, 0, 0]],
            &[&[1, 1, 1, 0], &[0, 1, 0, 0]],
        ]);
        let rec = h3_recover(&tr);
        assert!(rec.registry.contains(t(0, 1)));
        assert!(rec.frames[1].components[0].endpoints.contains(&t(0, 1)));
        // the other three come from frame 1's own degree-1 tiles
        assert_eq!(rec.frames[1].components[0].endpoints.len(), 4);
    }

    #[test]
    fn strip_is_known() {
        let tr = trace_of(&[&[&[1, 1, 1, 1]]]);
        let rec = h3_recover(&tr);
        let comp = &rec.frames[0].components[0];
        assert_eq!(
            comp.status,
            ComponentStatus::Known(vec![vec![t(0, 0), t(0, 1), t(0, 2), t(0, 3)]])
        );
        assert_eq!(
            rec.frames[0].cells,
            vec![0b0110001, 0b0010011, 0b0010011, 0b0110010]
        );
    }

    #[test]
    fn two_by_three_corners_are_ambiguous() {
        let tiles: BTreeSet<_> = (0..2).flat_map(|r| (0..3).map(move |c| t(r, c))).collect();
        let ends: BTreeSet<_> = [t(0, 0), t(0, 2), t(1, 0), t(1, 2)].into();
        // no endpoint has a single possible partner
        assert_eq!(greedy_decompose(&tiles, &ends), None);
    }

    #[test]
    fn shortest_route_leaving_tiles_fails() {
        let tiles: BTreeSet<_> = (0..2).flat_map(|r| (0..3).map(move |c| t(r, c))).collect();
        let ends: BTreeSet<_> = [t(0, 0), t(0, 2)].into();
        assert_eq!(greedy_decompose(&tiles, &ends), None);
    }

    #[test]
    fn uniqueness_check() {
        let rect: BTreeSet<_> = (0..2).flat_map(|r| (0..3).map(move |c| t(r, c))).collect();
        assert!(!is_unique_cover(
            &rect,
            &[t(0, 0), t(0, 2), t(1, 0), t(1, 2)].into(),
            1000
        ));
        let strip: BTreeSet<_> = (0..4).map(|c| t(0, c)).collect();
        assert!(is_unique_cover(&strip, &[t(0, 0), t(0, 3)].into(), 1000));
        // hitting the search cap counts as not unique
        assert!(!is_unique_cover(&strip, &[t(0, 0), t(0, 3)].into(), 1));
    }

    #[test]
    fn ambiguous_cells_use_reserved_codes() {
        let tr = trace_of(&[&[&[1, 1], &[1, 1]], &[&[1, 1], &[0, 0]]]);
        let rec = h3_recover(&tr);
        assert!(rec.frames[0].components[0].is_ambiguous());
        assert_eq!(
            rec.frames[0].cells,
            vec![0b1110000, 0b1110000, 0b1010000, 0b1010000]
        );
        assert_eq!(rec.ambiguity_pct(), 50.0);
    }

    #[test]
    fn components_sidecar_shape() {
        let tr = trace_of(&[&[&[1, 1, 0, 1]]]);
        let rec = h3_recover(&tr);
        let v: serde_json::Value = serde_json::from_str(&rec.components_json().unwrap()).unwrap();
        assert_eq!(v[0]["status"], "known");
        assert_eq!(v[0]["paths"], serde_json::json!([[[0, 0], [0, 1]]]));
        assert_eq!(v[1]["status"], "ambiguous");
        assert_eq!(v[1]["tiles"], serde_json::json!([[0, 3]]));
        assert_eq!(v[1]["component_id"], 1);
    }
}
