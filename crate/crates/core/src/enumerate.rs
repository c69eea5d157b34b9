//! Exhaustive enumeration of vertex-disjoint endpoint-to-endpoint path covers.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::TileCoord;

/// Largest region the brute-force oracle accepts.
pub const ORACLE_MAX_TILES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("odd number of endpoints ({0}) in component")]
    OddEndpointCount(usize),
    #[error("region has {0} tiles; the oracle accepts at most {ORACLE_MAX_TILES}")]
    TooLarge(usize),
}

/// A connected active region and the tiles in it believed to host qubits.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub tiles: BTreeSet<TileCoord>,
    pub endpoints: BTreeSet<TileCoord>,
}

impl Region {
    pub fn new(
        tiles: impl IntoIterator<Item = TileCoord>,
        endpoints: impl IntoIterator<Item = TileCoord>,
    ) -> Self {
        Self {
            tiles: tiles.into_iter().collect(),
            endpoints: endpoints.into_iter().collect(),
        }
    }

    /// Rectangle of active tiles with the top-left corner at the origin.
    pub fn rect(rows: usize, cols: usize, endpoints: impl IntoIterator<Item = TileCoord>) -> Self {
        let tiles = (0..rows).flat_map(|r| (0..cols).map(move |c| TileCoord::new(r, c)));
        Self::new(tiles, endpoints)
    }
}

/// One way to explain a region: every tile lies on exactly one path.
/// Each path is stored with its row-major smaller endpoint first and the
/// paths are sorted, so equal covers compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathSolution {
    pub paths: Vec<Vec<TileCoord>>,
}

impl PathSolution {
    pub fn canonical(mut paths: Vec<Vec<TileCoord>>) -> Self {
        for p in &mut paths {
            if p.first() > p.last() {
                p.reverse();
            }
        }
        paths.sort();
        Self { paths }
    }

    /// Endpoint pairs, in path order.
    pub fn pairs(&self) -> impl Iterator<Item = (TileCoord, TileCoord)> + '_ {
        self.paths.iter().map(|p| (p[0], p[p.len() - 1]))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub max_time: Option<Duration>,
    pub max_expansions: Option<u64>,
    pub max_solutions: Option<usize>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn with_time(max_time: Duration) -> Self {
        Self {
            max_time: Some(max_time),
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnumerationStats {
    pub expansions: u64,
    pub elapsed_ms: f64,
    /// False when a budget limit stopped the search early.
    pub complete: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    pub solutions: Vec<PathSolution>,
    pub stats: EnumerationStats,
}

/// Local re-indexing of a region: tiles in row-major order, adjacency by index.
struct Graph {
    tiles: Vec<TileCoord>,
    adj: Vec<Vec<usize>>,
    is_endpoint: Vec<bool>,
}

impl Graph {
    fn new(region: &Region) -> Self {
        let tiles: Vec<TileCoord> = region.tiles.iter().copied().collect();
        let adj = tiles
            .iter()
            .map(|&t| {
                tiles
                    .iter()
                    .enumerate()
                    .filter(|(_, &u)| u.is_adjacent(t))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let is_endpoint = tiles.iter().map(|t| region.endpoints.contains(t)).collect();
        Self {
            tiles,
            adj,
            is_endpoint,
        }
    }

    fn coords(&self, path: &[usize]) -> Vec<TileCoord> {
        path.iter().map(|&i| self.tiles[i]).collect()
    }
}

struct Search<'a> {
    g: &'a Graph,
    used: Vec<bool>,
    unused_count: usize,
    paths: Vec<Vec<usize>>,
    solutions: Vec<PathSolution>,
    budget: Budget,
    start: Instant,
    expansions: u64,
    stopped: bool,
    // scratch for pruning
    mark: Vec<u32>,
    epoch: u32,
    stack: Vec<usize>,
}

impl Search<'_> {
    fn tick(&mut self) -> bool {
        self.expansions += 1;
        if let Some(max) = self.budget.max_expansions {
            if self.expansions > max {
                self.stopped = true;
            }
        }
        if self.expansions % 1024 == 0 {
            if let Some(max) = self.budget.max_time {
                if self.start.elapsed() > max {
                    self.stopped = true;
                }
            }
        }
        !self.stopped
    }

    fn use_tile(&mut self, i: usize) {
        self.used[i] = true;
        self.unused_count -= 1;
    }

    fn free_tile(&mut self, i: usize) {
        self.used[i] = false;
        self.unused_count += 1;
    }

    fn record(&mut self) {
        let paths = self.paths.iter().map(|p| self.g.coords(p)).collect();
        self.solutions.push(PathSolution::canonical(paths));
        if let Some(max) = self.budget.max_solutions {
            if self.solutions.len() >= max {
                self.stopped = true;
            }
        }
    }

    /// Start a new path at the smallest unmatched endpoint, or record a
    /// finished cover.
    fn next_path(&mut self) {
        if self.stopped {
            return;
        }
        let Some(e) = (0..self.g.tiles.len()).find(|&i| self.g.is_endpoint[i] && !self.used[i])
        else {
            if self.unused_count == 0 {
                self.record();
            }
            return;
        };
        self.use_tile(e);
        self.paths.push(vec![e]);
        self.extend(e);
        self.paths.pop();
        self.free_tile(e);
    }

    fn extend(&mut self, head: usize) {
        if !self.tick() || !self.feasible(head) {
            return;
        }
        let g = self.g;
        for &nb in &g.adj[head] {
            if self.used[nb] {
                continue;
            }
            self.use_tile(nb);
            self.paths.last_mut().expect("open path").push(nb);
            if g.is_endpoint[nb] {
                self.next_path();
            } else {
                self.extend(nb);
            }
            self.paths.last_mut().expect("open path").pop();
            self.free_tile(nb);
            if self.stopped {
                return;
            }
        }
    }

    /// Necessary conditions for completing a cover from this state: every
    /// connected group of unused wire tiles touches at least two distinct
    /// terminals (the open path's head or unmatched endpoints), and every
    /// unmatched endpoint still has somewhere to go.
    fn feasible(&mut self, head: usize) -> bool {
        let g = self.g;
        let n = g.tiles.len();
        let is_terminal = |s: &Self, i: usize| i == head || (g.is_endpoint[i] && !s.used[i]);

        for e in 0..n {
            if !g.is_endpoint[e] || self.used[e] {
                continue;
            }
            if !g.adj[e].iter().any(|&u| !self.used[u] || u == head) {
                return false;
            }
        }

        self.epoch += 1;
        let epoch = self.epoch;
        for s in 0..n {
            if self.used[s] || g.is_endpoint[s] || self.mark[s] == epoch {
                continue;
            }
            // flood one wire group, collecting up to two distinct terminals
            let mut terminals = [usize::MAX; 2];
            self.mark[s] = epoch;
            self.stack.clear();
            self.stack.push(s);
            while let Some(v) = self.stack.pop() {
                for &u in &g.adj[v] {
                    if is_terminal(self, u) {
                        if terminals[0] == usize::MAX {
                            terminals[0] = u;
                        } else if terminals[0] != u {
                            terminals[1] = u;
                        }
                    } else if !self.used[u] && !g.is_endpoint[u] && self.mark[u] != epoch {
                        self.mark[u] = epoch;
                        self.stack.push(u);
                    }
                }
            }
            if terminals[1] == usize::MAX {
                return false;
            }
        }
        true
    }
}

/// Lists every set of vertex-disjoint paths that pairs up all endpoints of
/// `region` and covers all of its tiles. Path interiors avoid endpoint
/// tiles; two adjacent endpoints may form a path on their own. Solutions
/// come back sorted.
pub fn enumerate_solutions(
    region: &Region,
    budget: Budget,
) -> Result<EnumerationResult, EnumerateError> {
    let n_end = region.endpoints.len();
    if n_end % 2 == 1 {
        return Err(EnumerateError::OddEndpointCount(n_end));
    }
    let start = Instant::now();
    if n_end == 0 {
        let stats = EnumerationStats {
            expansions: 0,
            elapsed_ms: 0.0,
            complete: true,
        };
        return Ok(EnumerationResult {
            solutions: Vec::new(),
            stats,
        });
    }
    let g = Graph::new(region);
    let n = g.tiles.len();
    let mut search = Search {
        g: &g,
        used: vec![false; n],
        unused_count: n,
        paths: Vec::new(),
        solutions: Vec::new(),
        budget,
        start,
        expansions: 0,
        stopped: false,
        mark: vec![0; n],
        epoch: 0,
        stack: Vec::new(),
    };
    search.next_path();
    let mut solutions = search.solutions;
    solutions.sort();
    let stats = EnumerationStats {
        expansions: search.expansions,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        complete: !search.stopped,
    };
    Ok(EnumerationResult { solutions, stats })
}

/// Reference enumeration for small regions: tries every perfect matching of
/// the endpoints and every combination of simple paths for the pairs.
pub fn brute_force_oracle(region: &Region) -> Result<EnumerationResult, EnumerateError> {
    let n = region.tiles.len();
    if n > ORACLE_MAX_TILES {
        return Err(EnumerateError::TooLarge(n));
    }
    let n_end = region.endpoints.len();
    if n_end % 2 == 1 {
        return Err(EnumerateError::OddEndpointCount(n_end));
    }
    let start = Instant::now();
    let tiles: Vec<TileCoord> = region.tiles.iter().copied().collect();
    let ends: Vec<usize> = (0..n)
        .filter(|&i| region.endpoints.contains(&tiles[i]))
        .collect();
    let full: u32 = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let mut found: BTreeSet<PathSolution> = BTreeSet::new();

    if !ends.is_empty() {
        for matching in perfect_matchings(&ends) {
            let options: Vec<Vec<(u32, Vec<usize>)>> = matching
                .iter()
                .map(|&(a, b)| simple_paths(&tiles, &ends, a, b))
                .collect();
            let mut chosen = Vec::new();
            combine(
                &options,
                0,
                0,
                full,
                &mut chosen,
                &mut |paths: &[&Vec<usize>]| {
                    let coords = paths
                        .iter()
                        .map(|p| p.iter().map(|&i| tiles[i]).collect())
                        .collect();
                    found.insert(PathSolution::canonical(coords));
                },
            );
        }
    }
    let stats = EnumerationStats {
        expansions: 0,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        complete: true,
    };
    Ok(EnumerationResult {
        solutions: found.into_iter().collect(),
        stats,
    })
}

fn perfect_matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let mut out = Vec::new();
    for k in 1..items.len() {
        let rest: Vec<usize> = items[1..]
            .iter()
            .enumerate()
            .filter(|&(j, _)| j + 1 != k)
            .map(|(_, &x)| x)
            .collect();
        for mut m in perfect_matchings(&rest) {
            m.insert(0, (first, items[k]));
            out.push(m);
        }
    }
    out
}

/// All simple paths a → b whose interior avoids every endpoint, with their tile masks.
fn simple_paths(tiles: &[TileCoord], ends: &[usize], a: usize, b: usize) -> Vec<(u32, Vec<usize>)> {
    fn walk(
        tiles: &[TileCoord],
        ends: &[usize],
        b: usize,
        path: &mut Vec<usize>,
        mask: u32,
        out: &mut Vec<(u32, Vec<usize>)>,
    ) {
        let cur = *path.last().unwrap();
        for next in 0..tiles.len() {
            if mask & (1 << next) != 0 || !tiles[cur].is_adjacent(tiles[next]) {
                continue;
            }
            if next == b {
                path.push(next);
                out.push((mask | 1 << next, path.clone()));
                path.pop();
            } else if !ends.contains(&next) {
                path.push(next);
                walk(tiles, ends, b, path, mask | 1 << next, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(tiles, ends, b, &mut vec![a], 1 << a, &mut out);
    out
}

fn combine<'p>(
    options: &'p [Vec<(u32, Vec<usize>)>],
    k: usize,
    mask: u32,
    full: u32,
    chosen: &mut Vec<&'p Vec<usize>>,
    emit: &mut impl FnMut(&[&Vec<usize>]),
) {
    if k == options.len() {
        if mask == full {
            emit(chosen);
        }
        return;
    }
    for (m, p) in &options[k] {
        if mask & m == 0 {
            chosen.push(p);
            combine(options, k + 1, mask | m, full, chosen, emit);
            chosen.pop();
        }
    }
}
