//! Directed acyclic graphs of two-qubit gate events.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::layout::TileCoord;

/// Minimal adjacency-list digraph with deduplicated edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag<N> {
    nodes: Vec<N>,
    edges: Vec<(usize, usize)>,
    edge_set: BTreeSet<(usize, usize)>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl<N> Default for Dag<N> {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            edges: Vec::new(),
            edge_set: BTreeSet::new(),
            succ: Vec::new(),
            pred: Vec::new(),
        }
    }
}

impl<N> Dag<N> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: N) -> usize {
        self.nodes.push(node);
        self.succ.push(Vec::new());
        self.pred.push(Vec::new());
        self.nodes.len() - 1
    }

    /// Adds `from → to`; returns false if the edge already existed.
    pub fn add_edge(&mut self, from: usize, to: usize) -> bool {
        assert!(
            from < self.nodes.len() && to < self.nodes.len(),
            "edge {from}->{to} out of range"
        );
        if !self.edge_set.insert((from, to)) {
            return false;
        }
        self.edges.push((from, to));
        self.succ[from].push(to);
        self.pred[to].push(from);
        true
    }

    pub fn nodes(&self) -> &[N] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &N {
        &self.nodes[id]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edge_set.contains(&(from, to))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn successors(&self, id: usize) -> &[usize] {
        &self.succ[id]
    }

    pub fn predecessors(&self, id: usize) -> &[usize] {
        &self.pred[id]
    }

    /// Kahn's algorithm; `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = self.pred.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &self.succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Number of nodes on the longest directed path (0 for an empty graph).
    pub fn longest_path_len(&self) -> usize {
        let order = self
            .topological_order()
            .expect("longest path of a cyclic graph");
        let mut depth = vec![1usize; self.nodes.len()];
        for &v in &order {
            for &w in &self.succ[v] {
                depth[w] = depth[w].max(depth[v] + 1);
            }
        }
        depth.into_iter().max().unwrap_or(0)
    }

    /// Reachability sets (excluding the node itself).
    pub fn transitive_closure(&self) -> Vec<BTreeSet<usize>> {
        let order = self.topological_order().expect("closure of a cyclic graph");
        let mut reach: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.nodes.len()];
        for &v in order.iter().rev() {
            let mut set = BTreeSet::new();
            for &w in &self.succ[v] {
                set.insert(w);
                set.extend(reach[w].iter().copied());
            }
            reach[v] = set;
        }
        reach
    }

    pub fn map_nodes<M>(&self, mut f: impl FnMut(usize, &N) -> M) -> Dag<M> {
        Dag {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| f(i, n))
                .collect(),
            edges: self.edges.clone(),
            edge_set: self.edge_set.clone(),
            succ: self.succ.clone(),
            pred: self.pred.clone(),
        }
    }
}

/// Unordered tile pair, stored with the row-major smaller tile first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[TileCoord; 2]", into = "[TileCoord; 2]")]
pub struct TilePair {
    lo: TileCoord,
    hi: TileCoord,
}

impl TilePair {
    pub fn new(a: TileCoord, b: TileCoord) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn lo(self) -> TileCoord {
        self.lo
    }

    pub fn hi(self) -> TileCoord {
        self.hi
    }

    pub fn contains(self, t: TileCoord) -> bool {
        self.lo == t || self.hi == t
    }

    pub fn tiles(self) -> [TileCoord; 2] {
        [self.lo, self.hi]
    }
}

impl From<[TileCoord; 2]> for TilePair {
    fn from([a, b]: [TileCoord; 2]) -> Self {
        TilePair::new(a, b)
    }
}

impl From<TilePair> for [TileCoord; 2] {
    fn from(p: TilePair) -> Self {
        [p.lo, p.hi]
    }
}

/// Identifies which enumerated alternative of an ambiguous component produced a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AltGroup {
    pub frame: usize,
    pub component: usize,
    pub solution: usize,
}

/// A two-qubit gate event located on the tile grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateNode {
    pub id: usize,
    pub timestep: usize,
    pub tiles: TilePair,
    pub alt_group: Option<AltGroup>,
}

impl GateNode {
    pub fn is_ambiguous(&self) -> bool {
        self.alt_group.is_some()
    }
}

pub type GateDag = Dag<GateNode>;

#[derive(Serialize, Deserialize)]
struct GateDagFile {
    nodes: Vec<GateNode>,
    edges: Vec<[usize; 2]>,
}

impl GateDag {
    pub fn to_json(&self) -> serde_json::Result<String> {
        let file = GateDagFile {
            nodes: self.nodes.clone(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&file)
    }

    /// Parses the DAG JSON form. Node ids must equal their position in the list.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: GateDagFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut dag = GateDag::new();
        for (i, node) in file.nodes.into_iter().enumerate() {
            if node.id != i {
                return Err(format!("node at position {i} has id {}", node.id));
            }
            dag.add_node(node);
        }
        for [a, b] in file.edges {
            if a >= dag.node_count() || b >= dag.node_count() {
                return Err(format!("edge {a}->{b} references a missing node"));
            }
            dag.add_edge(a, b);
        }
        Ok(dag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedups_edges_and_detects_cycles() {
        let mut d: Dag<()> = Dag::new();
        for _ in 0..3 {
            d.add_node(());
        }
        assert!(d.add_edge(0, 1));
        assert!(!d.add_edge(0, 1));
        d.add_edge(1, 2);
        assert!(d.is_acyclic());
        assert_eq!(d.longest_path_len(), 3);
        assert_eq!(d.transitive_closure()[0], [1, 2].into_iter().collect());
        d.add_edge(2, 0);
        assert!(!d.is_acyclic());
    }

    #[test]
    fn tile_pair_is_unordered() {
        let a = TileCoord::new(1, 0);
        let b = TileCoord::new(0, 3);
        assert_eq!(TilePair::new(a, b), TilePair::new(b, a));
        assert_eq!(TilePair::new(a, b).lo(), b);
    }

    #[test]
    fn gate_dag_json_shape() {
        let mut d = GateDag::new();
        let p = TilePair::new(TileCoord::new(0, 0), TileCoord::new(0, 1));
        d.add_node(GateNode {
            id: 0,
            timestep: 0,
            tiles: p,
            alt_group: None,
        });
        d.add_node(GateNode {
            id: 1,
            timestep: 2,
            tiles: p,
            alt_group: Some(AltGroup {
                frame: 2,
                component: 0,
                solution: 1,
            }),
        });
        d.add_edge(0, 1);
        let text = d.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["nodes"][0]["tiles"], serde_json::json!([[0, 0], [0, 1]]));
        assert_eq!(v["nodes"][0]["alt_group"], serde_json::Value::Null);
        assert_eq!(v["edges"], serde_json::json!([[0, 1]]));
        assert_eq!(GateDag::from_json(&text).unwrap(), d);
    }
}
