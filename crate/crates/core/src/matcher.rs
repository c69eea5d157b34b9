//! Subgraph monomorphism search (VF2 family) between gate DAGs.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dag::{Dag, GateDag};
use crate::layout::TileCoord;
use crate::qasm::{circuit_to_dag, LogicalCircuit};

/// Directed graph prepared for matching. Every node names the two sites
/// (qubits or tiles) its gate acts on, stored sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchGraph {
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    sites: Vec<[u32; 2]>,
    /// Sorted (descending) total degrees of each node's neighbours.
    nbr_degrees: Vec<Vec<usize>>,
    /// Node count per site, and per distinct site pair.
    site_count: HashMap<u32, usize>,
    pair_count: HashMap<[u32; 2], usize>,
    /// Distinct sites sharing a node with each site, with the pair's count.
    partners: HashMap<u32, Vec<(u32, usize)>>,
    /// Nodes with the same sites and the same in- and out-neighbours share
    /// a class; swapping two of them maps embeddings to embeddings.
    twin_class: Vec<usize>,
}

impl MatchGraph {
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        sites: Vec<[u32; 2]>,
    ) -> Self {
        assert_eq!(sites.len(), n, "one site pair per node");
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for (a, b) in edges {
            out[a].push(b);
            inn[b].push(a);
        }
        for v in out.iter_mut().chain(inn.iter_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        let sites = sites
            .into_iter()
            .map(|[a, b]| if a <= b { [a, b] } else { [b, a] })
            .collect();
        let sites: Vec<[u32; 2]> = sites;
        let mut site_count = HashMap::new();
        let mut pair_count = HashMap::new();
        for &[a, b] in &sites {
            *site_count.entry(a).or_insert(0) += 1;
            if b != a {
                *site_count.entry(b).or_insert(0) += 1;
            }
            *pair_count.entry([a, b]).or_insert(0) += 1;
        }
        let mut partners: HashMap<u32, Vec<(u32, usize)>> = HashMap::new();
        for (&[a, b], &k) in &pair_count {
            if a != b {
                partners.entry(a).or_default().push((b, k));
                partners.entry(b).or_default().push((a, k));
            }
        }
        let mut classes: HashMap<(&[u32; 2], &[usize], &[usize]), usize> = HashMap::new();
        let twin_class = (0..n)
            .map(|v| {
                let next = classes.len();
                *classes
                    .entry((&sites[v], &out[v][..], &inn[v][..]))
                    .or_insert(next)
            })
            .collect();
        let mut g = Self {
            out,
            inn,
            sites,
            nbr_degrees: Vec::new(),
            site_count,
            pair_count,
            partners,
            twin_class,
        };
        g.nbr_degrees = (0..n)
            .map(|v| {
                let mut d: Vec<usize> = g.neighbours(v).map(|u| g.degree(u)).collect();
                d.sort_unstable_by(|a, b| b.cmp(a));
                d
            })
            .collect();
        g
    }

    /// Structure only; every node gets the same sites.
    pub fn unlabeled(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self::new(n, edges, vec![[0, 0]; n])
    }

    pub fn from_dag<N>(dag: &Dag<N>, mut sites: impl FnMut(&N) -> [u32; 2]) -> Self {
        let s = dag.nodes().iter().map(&mut sites).collect();
        Self::new(dag.node_count(), dag.edges().iter().copied(), s)
    }

    /// Pattern graph of a circuit, sites being logical qubit indices.
    pub fn from_circuit(circuit: &LogicalCircuit) -> Self {
        Self::from_dag(&circuit_to_dag(circuit), |g| {
            [g.qubit_a as u32, g.qubit_b as u32]
        })
    }

    /// Target graph of a reconstructed DAG, sites being tiles.
    pub fn from_gate_dag(dag: &GateDag) -> Self {
        Self::from_dag(dag, |n| {
            let [a, b] = n.tiles.tiles();
            [tile_site(a), tile_site(b)]
        })
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.out[a].binary_search(&b).is_ok()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.out[v].len() + self.inn[v].len()
    }

    fn pair(&self, a: u32, b: u32) -> usize {
        let key = if a <= b { [a, b] } else { [b, a] };
        self.pair_count.get(&key).copied().unwrap_or(0)
    }

    fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[v].iter().chain(self.inn[v].iter()).copied()
    }
}

fn tile_site(t: TileCoord) -> u32 {
    ((t.row as u32) << 16) | t.col as u32
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    FirstMatch,
    CountAll,
}

/// How node sites constrain a match.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteRule {
    /// Ignore sites entirely.
    Structural,
    /// Pattern and target node must carry the same site pair.
    Exact,
    /// Pattern sites map injectively onto target sites, the same way for
    /// every node: a pattern qubit lands on one tile throughout.
    #[default]
    Consistent,
}

#[derive(Clone, Debug)]
pub struct MatchQuery<'a> {
    pub pattern: &'a MatchGraph,
    pub target: &'a MatchGraph,
    pub timeout: Option<Duration>,
    pub mode: MatchMode,
    pub sites: SiteRule,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStatus {
    Found,
    NotFound,
    Timeout,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub status: MatchStatus,
    /// First embedding found, indexed by pattern node.
    pub mapping: Option<Vec<usize>>,
    /// Embeddings found (all of them in count-all mode unless timed out).
    pub count: u64,
    pub states: u64,
    pub elapsed: Duration,
}

const TIMEOUT_CHECK_INTERVAL: u64 = 1024;

struct State<'a> {
    p: &'a MatchGraph,
    t: &'a MatchGraph,
    order: Vec<usize>,
    /// For each position in `order`, an earlier-ordered neighbour and whether
    /// the edge runs from it to the node (true) or back.
    anchor: Vec<Option<(usize, bool)>>,
    core_p: Vec<usize>,
    used_t: Vec<bool>,
    site_rule: SiteRule,
    site_fwd: HashMap<u32, (u32, u32)>,
    site_rev: HashMap<u32, u32>,
    mode: MatchMode,
    start: Instant,
    timeout: Option<Duration>,
    states: u64,
    count: u64,
    first: Option<Vec<usize>>,
    timed_out: bool,
}

const UNMAPPED: usize = usize::MAX;

impl State<'_> {
    fn done(&self) -> bool {
        self.timed_out || (self.mode == MatchMode::FirstMatch && self.first.is_some())
    }

    fn search(&mut self, depth: usize) {
        if depth == self.order.len() {
            self.count += 1;
            if self.first.is_none() {
                self.first = Some(self.core_p.clone());
            }
            return;
        }
        let pn = self.order[depth];
        let candidates: Vec<usize> = match self.anchor[depth] {
            Some((q, true)) => self.t.out[self.core_p[q]].clone(),
            Some((q, false)) => self.t.inn[self.core_p[q]].clone(),
            None => (0..self.t.node_count()).collect(),
        };
        // in first-match mode a failed candidate rules out its twins too
        let mut tried_classes: Vec<usize> = Vec::new();
        for tn in candidates {
            if self.mode == MatchMode::FirstMatch {
                let class = self.t.twin_class[tn];
                if tried_classes.contains(&class) {
                    continue;
                }
                if !self.used_t[tn] {
                    tried_classes.push(class);
                }
            }
            self.states += 1;
            if self.states % TIMEOUT_CHECK_INTERVAL == 0 {
                if let Some(limit) = self.timeout {
                    if self.start.elapsed() > limit {
                        self.timed_out = true;
                    }
                }
            }
            if self.done() {
                return;
            }
            if self.used_t[tn] || !self.feasible(pn, tn) {
                continue;
            }
            self.core_p[pn] = tn;
            self.used_t[tn] = true;
            match self.site_rule {
                SiteRule::Consistent => {
                    let [a, b] = self.p.sites[pn];
                    let [x, y] = self.t.sites[tn];
                    let orientations: &[[u32; 2]] =
                        if x == y { &[[x, y]] } else { &[[x, y], [y, x]] };
                    for &[x, y] in orientations {
                        if let Some(added) = self.bind_sites(a, b, x, y) {
                            self.search(depth + 1);
                            self.unbind_sites(&added);
                            if self.done() {
                                break;
                            }
                        }
                    }
                }
                _ => self.search(depth + 1),
            }
            self.core_p[pn] = UNMAPPED;
            self.used_t[tn] = false;
            if self.done() {
                return;
            }
        }
    }

    fn feasible(&self, pn: usize, tn: usize) -> bool {
        let (p, t) = (self.p, self.t);
        if p.out[pn].len() > t.out[tn].len() || p.inn[pn].len() > t.inn[tn].len() {
            return false;
        }
        if self.site_rule == SiteRule::Exact && p.sites[pn] != t.sites[tn] {
            return false;
        }
        let (pd, td) = (&p.nbr_degrees[pn], &t.nbr_degrees[tn]);
        if pd.len() > td.len() || pd.iter().zip(td).any(|(a, b)| a > b) {
            return false;
        }
        let mut unmapped_out = 0;
        for &q in &p.out[pn] {
            match self.core_p[q] {
                UNMAPPED => unmapped_out += 1,
                m if !t.has_edge(tn, m) => return false,
                _ => {}
            }
        }
        let mut unmapped_in = 0;
        for &q in &p.inn[pn] {
            match self.core_p[q] {
                UNMAPPED => unmapped_in += 1,
                m if !t.has_edge(m, tn) => return false,
                _ => {}
            }
        }
        let free_out = t.out[tn].iter().filter(|&&u| !self.used_t[u]).count();
        let free_in = t.inn[tn].iter().filter(|&&u| !self.used_t[u]).count();
        unmapped_out <= free_out && unmapped_in <= free_in
    }

    /// Records a → x and b → y if consistent; returns what was newly bound.
    fn bind_sites(&mut self, a: u32, b: u32, x: u32, y: u32) -> Option<Vec<u32>> {
        let mut added = Vec::new();
        for (s, d) in [(a, x), (b, y)] {
            match self.site_fwd.get(&s) {
                Some(&(bound, _)) if bound != d => {
                    self.unbind_sites(&added);
                    return None;
                }
                Some(_) => {
                    self.site_fwd.get_mut(&s).expect("present").1 += 1;
                    added.push(s);
                }
                None => {
                    if self.site_rev.contains_key(&d) || !self.site_fits(s, d) {
                        self.unbind_sites(&added);
                        return None;
                    }
                    self.site_fwd.insert(s, (d, 1));
                    self.site_rev.insert(d, s);
                    added.push(s);
                }
            }
        }
        Some(added)
    }

    /// Necessary conditions for pattern site `s` to land on target site `d`:
    /// enough nodes on `d`, enough distinct partners, and enough nodes on
    /// every pair whose other site is already bound.
    fn site_fits(&self, s: u32, d: u32) -> bool {
        let (p, t) = (self.p, self.t);
        if p.site_count.get(&s).copied().unwrap_or(0) > t.site_count.get(&d).copied().unwrap_or(0) {
            return false;
        }
        let Some(ps) = p.partners.get(&s) else {
            return true;
        };
        if ps.len() > t.partners.get(&d).map_or(0, Vec::len) {
            return false;
        }
        ps.iter().all(|&(b, k)| match self.site_fwd.get(&b) {
            Some(&(y, _)) => t.pair(d, y) >= k,
            None => true,
        })
    }

    fn unbind_sites(&mut self, added: &[u32]) {
        for s in added {
            let entry = self.site_fwd.get_mut(s).expect("bound site");
            entry.1 -= 1;
            if entry.1 == 0 {
                let d = entry.0;
                self.site_fwd.remove(s);
                self.site_rev.remove(&d);
            }
        }
    }
}

/// Visit order for pattern nodes: most connections to already-ordered
/// nodes first, then higher degree, then lower id.
fn match_order(p: &MatchGraph) -> (Vec<usize>, Vec<Option<(usize, bool)>>) {
    let n = p.node_count();
    let mut placed = vec![false; n];
    let mut links = vec![0usize; n];
    let mut pos = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut anchor = Vec::with_capacity(n);
    for _ in 0..n {
        let next = (0..n)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| (links[v], p.degree(v), std::cmp::Reverse(v)))
            .expect("unplaced node");
        // anchor on the earliest placed neighbour with the smallest fan-out
        let from_pred = p.inn[next]
            .iter()
            .filter(|&&q| placed[q])
            .map(|&q| (pos[q], q, true));
        let from_succ = p.out[next]
            .iter()
            .filter(|&&q| placed[q])
            .map(|&q| (pos[q], q, false));
        anchor.push(from_pred.chain(from_succ).min().map(|(_, q, dir)| (q, dir)));
        placed[next] = true;
        pos[next] = order.len();
        order.push(next);
        for u in p.neighbours(next) {
            links[u] += 1;
        }
    }
    (order, anchor)
}

/// Cheap necessary conditions; false means no embedding can exist.
fn could_embed(p: &MatchGraph, t: &MatchGraph) -> bool {
    if p.node_count() > t.node_count() || p.edge_count() > t.edge_count() {
        return false;
    }
    let sorted_desc = |g: &MatchGraph, f: &dyn Fn(usize) -> usize| {
        let mut d: Vec<usize> = (0..g.node_count()).map(f).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d
    };
    let dominated = |pd: Vec<usize>, td: Vec<usize>| pd.iter().zip(&td).all(|(a, b)| a <= b);
    dominated(
        sorted_desc(p, &|v| p.out[v].len()),
        sorted_desc(t, &|v| t.out[v].len()),
    ) && dominated(
        sorted_desc(p, &|v| p.inn[v].len()),
        sorted_desc(t, &|v| t.inn[v].len()),
    ) && dominated(
        sorted_desc(p, &|v| p.degree(v)),
        sorted_desc(t, &|v| t.degree(v)),
    )
}

pub fn find_subgraph(query: &MatchQuery) -> MatchResult {
    let start = Instant::now();
    let (p, t) = (query.pattern, query.target);
    let finish = |status, mapping, count, states| MatchResult {
        status,
        mapping,
        count,
        states,
        elapsed: start.elapsed(),
    };
    if query.timeout == Some(Duration::ZERO) {
        return finish(MatchStatus::Timeout, None, 0, 0);
    }
    if p.node_count() == 0 {
        return finish(MatchStatus::Found, Some(Vec::new()), 1, 0);
    }
    if !could_embed(p, t) {
        return finish(MatchStatus::NotFound, None, 0, 0);
    }
    let (order, anchor) = match_order(p);
    let mut st = State {
        p,
        t,
        order,
        anchor,
        core_p: vec![UNMAPPED; p.node_count()],
        used_t: vec![false; t.node_count()],
        site_rule: query.sites,
        site_fwd: HashMap::new(),
        site_rev: HashMap::new(),
        mode: query.mode,
        start,
        timeout: query.timeout,
        states: 0,
        count: 0,
        first: None,
        timed_out: false,
    };
    st.search(0);
    let status = if st.timed_out {
        MatchStatus::Timeout
    } else if st.first.is_some() {
        MatchStatus::Found
    } else {
        MatchStatus::NotFound
    };
    // a timed-out search still reports what it had found
    let mapping = if status == MatchStatus::Timeout {
        None
    } else {
        st.first
    };
    finish(status, mapping, st.count, st.states)
}

/// Independent check of a claimed embedding: injective and edge-preserving.
pub fn verify_mapping(pattern: &MatchGraph, target: &MatchGraph, mapping: &[usize]) -> bool {
    if mapping.len() != pattern.node_count() || mapping.iter().any(|&m| m >= target.node_count()) {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    if !mapping.iter().all(|m| seen.insert(*m)) {
        return false;
    }
    (0..pattern.node_count()).all(|a| {
        pattern.out[a]
            .iter()
            .all(|&b| target.has_edge(mapping[a], mapping[b]))
    })
}

/// Checks that pattern sites map one-to-one onto target sites across the embedding.
pub fn verify_site_consistency(
    pattern: &MatchGraph,
    target: &MatchGraph,
    mapping: &[usize],
) -> bool {
    fn assign(fwd: &mut HashMap<u32, u32>, rev: &mut HashMap<u32, u32>, s: u32, d: u32) -> bool {
        match (fwd.get(&s), rev.get(&d)) {
            (Some(&x), _) if x != d => false,
            (_, Some(&y)) if y != s => false,
            _ => {
                fwd.insert(s, d);
                rev.insert(d, s);
                true
            }
        }
    }
    // try both orientations per node via backtracking over nodes
    fn go(
        i: usize,
        p: &MatchGraph,
        t: &MatchGraph,
        mapping: &[usize],
        fwd: &HashMap<u32, u32>,
        rev: &HashMap<u32, u32>,
    ) -> bool {
        if i == mapping.len() {
            return true;
        }
        let [a, b] = p.sites[i];
        let [x, y] = t.sites[mapping[i]];
        for [x, y] in [[x, y], [y, x]] {
            let (mut f, mut r) = (fwd.clone(), rev.clone());
            if assign(&mut f, &mut r, a, x)
                && assign(&mut f, &mut r, b, y)
                && go(i + 1, p, t, mapping, &f, &r)
            {
                return true;
            }
        }
        false
    }
    go(
        0,
        pattern,
        target,
        mapping,
        &HashMap::new(),
        &HashMap::new(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubroutineReport {
    pub subroutine: String,
    pub status: MatchStatus,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mapping: Option<Vec<usize>>,
}

/// Looks for every library pattern in `target`, one search per entry.
pub fn detect_subroutines(
    library: &[(String, MatchGraph)],
    target: &MatchGraph,
    timeout: Option<Duration>,
    sites: SiteRule,
) -> Vec<SubroutineReport> {
    library
        .iter()
        .map(|(name, pattern)| {
            let res = find_subgraph(&MatchQuery {
                pattern,
                target,
                timeout,
                mode: MatchMode::FirstMatch,
                sites,
            });
            SubroutineReport {
                subroutine: name.clone(),
                status: res.status,
                elapsed_ms: res.elapsed.as_secs_f64() * 1e3,
                mapping: res.mapping,
            }
        })
        .collect()
}
