//! Logical-qubit grid layouts.
//!
//! A layout is a `rows × cols` grid of tiles. Each tile either hosts one
//! logical qubit or is a routing tile that lattice-surgery paths may pass
//! through. Three standard floorplans are provided:
//!
//! * **Square sparse**: every qubit is surrounded by routing tiles on all four
//!   sides. Qubits sit on the odd/odd positions of a `(2a+1) × (2b+1)` grid.
//! * **Compact**: two qubit rows separated by a single routing row.
//! * **Intermediate**: one qubit row above a single routing row.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grid position. Ordering is row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct TileCoord {
    pub row: usize,
    pub col: usize,
}

impl TileCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: TileCoord) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn is_adjacent(self, other: TileCoord) -> bool {
        self.manhattan(other) == 1
    }

    /// 4-neighbours inside a `rows × cols` grid, in row-major order.
    pub fn neighbors(self, rows: usize, cols: usize) -> impl Iterator<Item = TileCoord> {
        let TileCoord { row, col } = self;
        let north = (row > 0).then(|| TileCoord::new(row - 1, col));
        let west = (col > 0).then(|| TileCoord::new(row, col - 1));
        let east = (col + 1 < cols).then(|| TileCoord::new(row, col + 1));
        let south = (row + 1 < rows).then(|| TileCoord::new(row + 1, col));
        [north, west, east, south].into_iter().flatten()
    }
}

impl From<[usize; 2]> for TileCoord {
    fn from([row, col]: [usize; 2]) -> Self {
        Self { row, col }
    }
}

impl From<TileCoord> for [usize; 2] {
    fn from(t: TileCoord) -> Self {
        [t.row, t.col]
    }
}

impl fmt::Display for TileCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutKind {
    #[serde(rename = "sparse")]
    SquareSparse,
    Compact,
    Intermediate,
    /// Loaded from a file rather than built from one of the standard floorplans.
    Custom,
}

impl LayoutKind {
    pub const STANDARD: [LayoutKind; 3] = [
        LayoutKind::SquareSparse,
        LayoutKind::Compact,
        LayoutKind::Intermediate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::SquareSparse => "sparse",
            LayoutKind::Compact => "compact",
            LayoutKind::Intermediate => "intermediate",
            LayoutKind::Custom => "custom",
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LayoutKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sparse" | "square-sparse" => Ok(LayoutKind::SquareSparse),
            "compact" => Ok(LayoutKind::Compact),
            "intermediate" => Ok(LayoutKind::Intermediate),
            other => Err(format!(
                "unknown layout `{other}` (expected sparse, compact or intermediate)"
            )),
        }
    }
}

/// Placement of logical qubits on a tile grid.
///
/// Fields are public so that arbitrary (possibly invalid) layouts can be
/// described; [`validate_layout`] checks the structural invariants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub kind: LayoutKind,
    pub rows: usize,
    pub cols: usize,
    /// `qubit_tiles[q]` is the tile of logical qubit `q`.
    pub qubit_tiles: Vec<TileCoord>,
    pub routing_tiles: BTreeSet<TileCoord>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("a layout needs at least 2 qubits, got {0}")]
    TooFewQubits(usize),
}

impl Layout {
    /// Builds a layout from explicit qubit tiles; every other tile is routing.
    pub fn from_qubit_tiles(
        kind: LayoutKind,
        rows: usize,
        cols: usize,
        qubit_tiles: Vec<TileCoord>,
    ) -> Self {
        let occupied: BTreeSet<TileCoord> = qubit_tiles.iter().copied().collect();
        let routing_tiles = all_tiles(rows, cols)
            .filter(|t| !occupied.contains(t))
            .collect();
        Self {
            kind,
            rows,
            cols,
            qubit_tiles,
            routing_tiles,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.qubit_tiles.len()
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    pub fn tile_of(&self, qubit: usize) -> Option<TileCoord> {
        self.qubit_tiles.get(qubit).copied()
    }

    pub fn index(&self, tile: TileCoord) -> usize {
        tile.row * self.cols + tile.col
    }

    pub fn contains(&self, tile: TileCoord) -> bool {
        tile.row < self.rows && tile.col < self.cols
    }

    /// Per-tile qubit occupancy in row-major order.
    pub fn qubit_map(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.area()];
        for (q, &t) in self.qubit_tiles.iter().enumerate() {
            if self.contains(t) {
                map[self.index(t)] = Some(q);
            }
        }
        map
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&LayoutFile::from(self))
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let file: LayoutFile = serde_json::from_str(text)?;
        Ok(file.into())
    }
}

/// On-disk form; routing tiles are implicit.
#[derive(Serialize, Deserialize)]
struct LayoutFile {
    kind: LayoutKind,
    rows: usize,
    cols: usize,
    qubit_tiles: Vec<TileCoord>,
}

impl From<&Layout> for LayoutFile {
    fn from(l: &Layout) -> Self {
        Self {
            kind: l.kind,
            rows: l.rows,
            cols: l.cols,
            qubit_tiles: l.qubit_tiles.clone(),
        }
    }
}

impl From<LayoutFile> for Layout {
    fn from(f: LayoutFile) -> Self {
        Layout::from_qubit_tiles(f.kind, f.rows, f.cols, f.qubit_tiles)
    }
}

impl Serialize for Layout {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LayoutFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Layout {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        LayoutFile::deserialize(deserializer).map(Layout::from)
    }
}

pub(crate) fn all_tiles(rows: usize, cols: usize) -> impl Iterator<Item = TileCoord> {
    (0..rows).flat_map(move |r| (0..cols).map(move |c| TileCoord::new(r, c)))
}

/// Builds one of the standard floorplans for `n_qubits` qubits. Qubit `i`
/// occupies the `i`-th qubit slot in row-major order.
pub fn build_layout(kind: LayoutKind, n_qubits: usize) -> Result<Layout, LayoutError> {
    if n_qubits < 2 {
        return Err(LayoutError::TooFewQubits(n_qubits));
    }
    let layout = match kind {
        LayoutKind::SquareSparse => {
            let (a, b) = sparse_block_dims(n_qubits);
            let tiles = (0..n_qubits)
                .map(|i| TileCoord::new(2 * (i / b) + 1, 2 * (i % b) + 1))
                .collect();
            Layout::from_qubit_tiles(kind, 2 * a + 1, 2 * b + 1, tiles)
        }
        // Custom has no floorplan of its own; fall back to the compact shape.
        LayoutKind::Compact | LayoutKind::Custom => {
            let width = n_qubits.div_ceil(2);
            let tiles = (0..n_qubits)
                .map(|i| {
                    if i < width {
                        TileCoord::new(0, i)
                    } else {
                        TileCoord::new(2, i - width)
                    }
                })
                .collect();
            Layout::from_qubit_tiles(LayoutKind::Compact, 3, width, tiles)
        }
        LayoutKind::Intermediate => {
            let tiles = (0..n_qubits).map(|i| TileCoord::new(0, i)).collect();
            Layout::from_qubit_tiles(kind, 2, n_qubits, tiles)
        }
    };
    Ok(layout)
}

/// Smallest `a × b` block (a ≤ b, b − a ≤ 1) holding `n` qubits.
fn sparse_block_dims(n: usize) -> (usize, usize) {
    let mut b = 1;
    while b * b < n {
        b += 1;
    }
    let a = n.div_ceil(b);
    (a, b)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LayoutViolation {
    #[error("empty grid ({rows}x{cols})")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("tile {tile} lies outside the {rows}x{cols} grid")]
    OutOfBounds {
        tile: TileCoord,
        rows: usize,
        cols: usize,
    },
    #[error("overlapping qubit tiles: qubits {first} and {second} both at {tile}")]
    OverlappingQubitTiles {
        tile: TileCoord,
        first: usize,
        second: usize,
    },
    #[error("qubit {qubit} at {tile} is also listed as a routing tile")]
    QubitOnRoutingTile { tile: TileCoord, qubit: usize },
    #[error("tile {tile} is neither a qubit nor a routing tile")]
    UncoveredTile { tile: TileCoord },
    #[error("qubit unreachable: no route between qubit {from} at {from_tile} and qubit {to} at {to_tile}")]
    QubitUnreachable {
        from: usize,
        from_tile: TileCoord,
        to: usize,
        to_tile: TileCoord,
    },
}

/// Checks every structural invariant of `layout`, reporting the first violation.
pub fn validate_layout(layout: &Layout) -> Result<(), LayoutViolation> {
    let (rows, cols) = (layout.rows, layout.cols);
    if rows == 0 || cols == 0 {
        return Err(LayoutViolation::EmptyGrid { rows, cols });
    }
    let in_bounds = |tile: TileCoord| {
        if layout.contains(tile) {
            Ok(())
        } else {
            Err(LayoutViolation::OutOfBounds { tile, rows, cols })
        }
    };
    for &t in layout.qubit_tiles.iter().chain(layout.routing_tiles.iter()) {
        in_bounds(t)?;
    }

    let mut owner: Vec<Option<usize>> = vec![None; layout.area()];
    for (q, &t) in layout.qubit_tiles.iter().enumerate() {
        let slot = &mut owner[layout.index(t)];
        if let Some(first) = *slot {
            return Err(LayoutViolation::OverlappingQubitTiles {
                tile: t,
                first,
                second: q,
            });
        }
        *slot = Some(q);
        if layout.routing_tiles.contains(&t) {
            return Err(LayoutViolation::QubitOnRoutingTile { tile: t, qubit: q });
        }
    }
    if let Some(tile) = all_tiles(rows, cols)
        .find(|t| owner[layout.index(*t)].is_none() && !layout.routing_tiles.contains(t))
    {
        return Err(LayoutViolation::UncoveredTile { tile });
    }

    // Label routing components, then every qubit pair must either be adjacent
    // or touch a common routing component.
    let mut comp = vec![usize::MAX; layout.area()];
    let mut n_comp = 0;
    for &start in &layout.routing_tiles {
        if comp[layout.index(start)] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        comp[layout.index(start)] = n_comp;
        while let Some(t) = queue.pop_front() {
            for nb in t.neighbors(rows, cols) {
                let i = layout.index(nb);
                if comp[i] == usize::MAX && layout.routing_tiles.contains(&nb) {
                    comp[i] = n_comp;
                    queue.push_back(nb);
                }
            }
        }
        n_comp += 1;
    }
    let touching: Vec<BTreeSet<usize>> = layout
        .qubit_tiles
        .iter()
        .map(|t| {
            t.neighbors(rows, cols)
                .map(|nb| comp[layout.index(nb)])
                .filter(|&c| c != usize::MAX)
                .collect()
        })
        .collect();
    for a in 0..layout.qubit_tiles.len() {
        for b in a + 1..layout.qubit_tiles.len() {
            let (ta, tb) = (layout.qubit_tiles[a], layout.qubit_tiles[b]);
            if !ta.is_adjacent(tb) && touching[a].is_disjoint(&touching[b]) {
                return Err(LayoutViolation::QubitUnreachable {
                    from: a,
                    from_tile: ta,
                    to: b,
                    to_tile: tb,
                });
            }
        }
    }
    Ok(())
}
