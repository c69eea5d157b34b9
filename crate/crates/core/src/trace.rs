//! Access traces: time-indexed tile activity matrices at three levels of detail.
//!
//! * L1: one busy bit per tile.
//! * L2: `[busy][N][S][W][E]`, five bits per tile.
//! * L3: [`CellCode`], seven bits `[amb][role1][role0][N][S][W][E]`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::TileCoord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    North,
    South,
    West,
    East,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::South, Dir::West, Dir::East];

    pub const fn bit(self) -> u8 {
        match self {
            Dir::North => 0b1000,
            Dir::South => 0b0100,
            Dir::West => 0b0010,
            Dir::East => 0b0001,
        }
    }

    pub const fn opposite(self) -> Dir {
        match self {
            Dir::North => Dir::South,
            Dir::South => Dir::North,
            Dir::West => Dir::East,
            Dir::East => Dir::West,
        }
    }

    /// Direction from `from` to the 4-adjacent tile `to`.
    pub fn between(from: TileCoord, to: TileCoord) -> Option<Dir> {
        if !from.is_adjacent(to) {
            return None;
        }
        Some(if to.row < from.row {
            Dir::North
        } else if to.row > from.row {
            Dir::South
        } else if to.col < from.col {
            Dir::West
        } else {
            Dir::East
        })
    }

    pub fn step(self, t: TileCoord, rows: usize, cols: usize) -> Option<TileCoord> {
        let (r, c) = (t.row, t.col);
        match self {
            Dir::North => r.checked_sub(1).map(|r| TileCoord::new(r, c)),
            Dir::South => (r + 1 < rows).then(|| TileCoord::new(r + 1, c)),
            Dir::West => c.checked_sub(1).map(|c| TileCoord::new(r, c)),
            Dir::East => (c + 1 < cols).then(|| TileCoord::new(r, c + 1)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Idle = 0b00,
    Connection = 0b01,
    Control = 0b10,
    Target = 0b11,
}

/// Seven-bit L3 tile code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellCode(pub u8);

impl CellCode {
    pub const IDLE: CellCode = CellCode(0);
    pub const AMBIGUOUS_BIT: u8 = 0b100_0000;
    pub const EDGE_MASK: u8 = 0b000_1111;
    /// Logical-qubit endpoint inside an ambiguous component.
    pub const AMBIGUOUS_ENDPOINT: CellCode = CellCode(0b111_0000);
    /// Wire tile inside an ambiguous component.
    pub const AMBIGUOUS_WIRE: CellCode = CellCode(0b101_0000);

    pub fn new(role: Role, edges: u8, ambiguous: bool) -> Self {
        debug_assert!(edges <= Self::EDGE_MASK);
        let amb = if ambiguous { Self::AMBIGUOUS_BIT } else { 0 };
        CellCode(amb | ((role as u8) << 4) | edges)
    }

    pub fn role(self) -> Role {
        match (self.0 >> 4) & 0b11 {
            0b00 => Role::Idle,
            0b01 => Role::Connection,
            0b10 => Role::Control,
            _ => Role::Target,
        }
    }

    pub fn edges(self) -> u8 {
        self.0 & Self::EDGE_MASK
    }

    pub fn has_edge(self, dir: Dir) -> bool {
        self.0 & dir.bit() != 0
    }

    pub fn is_ambiguous(self) -> bool {
        self.0 & Self::AMBIGUOUS_BIT != 0
    }

    pub fn is_active(self) -> bool {
        self.0 != 0
    }

    pub fn to_l2(self) -> u8 {
        (u8::from(self.is_active()) << 4) | self.edges()
    }

    pub fn to_l1(self) -> u8 {
        u8::from(self.is_active())
    }
}

impl fmt::Binary for CellCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#09b}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum TraceLevel {
    L1 = 1,
    L2 = 2,
    L3 = 3,
}

impl TraceLevel {
    pub fn max_value(self) -> u8 {
        match self {
            TraceLevel::L1 => 1,
            TraceLevel::L2 => 0b1_1111,
            TraceLevel::L3 => 0b111_1111,
        }
    }
}

impl TryFrom<u8> for TraceLevel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(TraceLevel::L1),
            2 => Ok(TraceLevel::L2),
            3 => Ok(TraceLevel::L3),
            other => Err(format!("trace level must be 1, 2 or 3, got {other}")),
        }
    }
}

impl From<TraceLevel> for u8 {
    fn from(l: TraceLevel) -> u8 {
        l as u8
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("expected an L{expected} trace, got L{found}")]
    LevelMismatch { expected: u8, found: u8 },
    #[error("cannot downgrade to L3")]
    NotADowngrade,
    #[error("frame {frame} has {len} entries, expected {rows}x{cols}")]
    FrameShape {
        frame: usize,
        len: usize,
        rows: usize,
        cols: usize,
    },
    #[error("frame {frame}, tile {tile}: value {value} exceeds the L{level} maximum")]
    ValueOutOfRange {
        frame: usize,
        tile: TileCoord,
        value: u8,
        level: u8,
    },
    #[error("frame {frame}: edge bit toward {dir:?} at {tile} is not mirrored by its neighbour")]
    AsymmetricEdge {
        frame: usize,
        tile: TileCoord,
        dir: Dir,
    },
    #[error("invalid trace JSON: {0}")]
    Json(String),
}

/// A sequence of `rows × cols` frames, one per timestep, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub level: TraceLevel,
    pub rows: usize,
    pub cols: usize,
    pub frames: Vec<Vec<u8>>,
}

impl Trace {
    pub fn new(level: TraceLevel, rows: usize, cols: usize) -> Self {
        Self {
            level,
            rows,
            cols,
            frames: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn get(&self, frame: usize, tile: TileCoord) -> u8 {
        self.frames[frame][tile.row * self.cols + tile.col]
    }

    pub fn is_active(&self, frame: usize, tile: TileCoord) -> bool {
        self.get(frame, tile) != 0
    }

    /// Active tiles of a frame in row-major order.
    pub fn active_tiles(&self, frame: usize) -> Vec<TileCoord> {
        let cols = self.cols;
        self.frames[frame]
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| TileCoord::new(i / cols, i % cols))
            .collect()
    }

    /// Checks shapes, value ranges and (L2/L3) edge-bit symmetry.
    pub fn validate(&self) -> Result<(), TraceError> {
        let max = self.level.max_value();
        for (f, frame) in self.frames.iter().enumerate() {
            if frame.len() != self.rows * self.cols {
                return Err(TraceError::FrameShape {
                    frame: f,
                    len: frame.len(),
                    rows: self.rows,
                    cols: self.cols,
                });
            }
            for (i, &v) in frame.iter().enumerate() {
                let tile = TileCoord::new(i / self.cols, i % self.cols);
                if v > max {
                    return Err(TraceError::ValueOutOfRange {
                        frame: f,
                        tile,
                        value: v,
                        level: self.level as u8,
                    });
                }
                if self.level == TraceLevel::L1 {
                    continue;
                }
                for dir in Dir::ALL {
                    let set = v & dir.bit() != 0;
                    let mirrored = dir
                        .step(tile, self.rows, self.cols)
                        .map(|nb| frame[nb.row * self.cols + nb.col] & dir.opposite().bit() != 0)
                        .unwrap_or(false);
                    if set != mirrored {
                        return Err(TraceError::AsymmetricEdge {
                            frame: f,
                            tile,
                            dir,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        let trace: Trace =
            serde_json::from_str(text).map_err(|e| TraceError::Json(e.to_string()))?;
        trace.validate()?;
        Ok(trace)
    }
}

/// Projects an L3 trace down to L1 or L2.
pub fn downgrade(trace: &Trace, level: TraceLevel) -> Result<Trace, TraceError> {
    if trace.level != TraceLevel::L3 {
        return Err(TraceError::LevelMismatch {
            expected: 3,
            found: trace.level as u8,
        });
    }
    let project: fn(CellCode) -> u8 = match level {
        TraceLevel::L1 => CellCode::to_l1,
        TraceLevel::L2 => CellCode::to_l2,
        TraceLevel::L3 => return Err(TraceError::NotADowngrade),
    };
    let frames = trace
        .frames
        .iter()
        .map(|frame| frame.iter().map(|&v| project(CellCode(v))).collect())
        .collect();
    Ok(Trace {
        level,
        rows: trace.rows,
        cols: trace.cols,
        frames,
    })
}
