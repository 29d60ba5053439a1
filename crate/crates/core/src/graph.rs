//! Simple undirected graphs, line graphs, self-avoiding-walk trees and the
//! connected-set counting used by the block-to-single-site comparison.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cap on the number of `ell`-subsets enumerated by [`component_size_probability`].
pub const MAX_SUBSETS: u64 = 10_000_000;
/// Default cap on the number of nodes of a path tree.
pub const MAX_PATH_TREE_NODES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    edge_ids: HashMap<(usize, usize), usize>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawGraph> for Graph {
    type Error = Error;
    fn try_from(raw: RawGraph) -> Result<Self> {
        Graph::new(raw.n, &raw.edges)
    }
}

impl From<Graph> for RawGraph {
    fn from(g: Graph) -> Self {
        RawGraph { n: g.n, edges: g.edges }
    }
}

impl Graph {
    /// Builds a graph on `0..n`. Edges are stored as `(min, max)` in input order.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut edge_ids = HashMap::new();
        let mut stored = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if edge_ids.contains_key(&key) {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
            edge_ids.insert(key, stored.len());
            stored.push(key);
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { n, edges: stored, adj, edge_ids })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_ids.contains_key(&(u.min(v), u.max(v)))
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        self.edge_ids.get(&(u.min(v), u.max(v))).copied()
    }

    /// Neighborhood bitmasks; requires `n <= 64`.
    pub fn adjacency_masks(&self) -> Result<Vec<u64>> {
        if self.n > 64 {
            return Err(Error::InstanceTooLarge(format!("{} vertices (bitmask limit 64)", self.n)));
        }
        Ok(self
            .adj
            .iter()
            .map(|nb| nb.iter().fold(0u64, |acc, &w| acc | (1u64 << w)))
            .collect())
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let all: Vec<usize> = (0..self.n).collect();
        components_within(self, &all).map(|c| c.len() == 1).unwrap_or(false)
    }

    /// Subgraph keeping all vertices and the edges whose ids satisfy `keep`.
    pub fn edge_subgraph(&self, keep: impl Fn(usize) -> bool) -> Graph {
        let edges: Vec<(usize, usize)> =
            self.edges.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, &e)| e).collect();
        Graph::new(self.n, &edges).expect("subgraph of a valid graph")
    }

    /// Parses the `n m` / `u v` text format.
    pub fn parse(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::GraphParse { line: 1, msg: "missing header".into() })?;
        let nums = parse_ints(header, hline)?;
        if nums.len() != 2 {
            return Err(Error::GraphParse { line: hline, msg: "header must be `n m`".into() });
        }
        let (n, m) = (nums[0], nums[1]);
        let mut edges = Vec::with_capacity(m);
        for (line, l) in lines.by_ref().take(m) {
            let p = parse_ints(l, line)?;
            if p.len() != 2 {
                return Err(Error::GraphParse { line, msg: "edge line must be `u v`".into() });
            }
            if p[0] >= n || p[1] >= n {
                return Err(Error::GraphParse { line, msg: format!("vertex out of range for n = {n}") });
            }
            edges.push((p[0], p[1]));
        }
        if edges.len() != m {
            return Err(Error::GraphParse { line: hline, msg: format!("expected {m} edges, found {}", edges.len()) });
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::GraphParse { line, msg: "trailing content after edge list".into() });
        }
        Graph::new(n, &edges)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.m());
        for &(u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }
}

fn parse_ints(l: &str, line: usize) -> Result<Vec<usize>> {
    l.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::GraphParse { line, msg: format!("bad integer `{t}`") }))
        .collect()
}

/// Line graph together with the edge of the base graph that each vertex represents.
#[derive(Debug, Clone, PartialEq)]
pub struct LineGraph {
    pub graph: Graph,
    pub edge_of: Vec<(usize, usize)>,
}

pub fn line_graph(g: &Graph) -> Result<LineGraph> {
    if g.m() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let mut edges = Vec::new();
    for v in 0..g.n() {
        let inc: Vec<usize> = g.neighbors(v).iter().map(|&w| g.edge_id(v, w).unwrap()).collect();
        for i in 0..inc.len() {
            for j in i + 1..inc.len() {
                edges.push((inc[i].min(inc[j]), inc[i].max(inc[j])));
            }
        }
    }
    edges.sort_unstable();
    Ok(LineGraph { graph: Graph::new(g.m(), &edges)?, edge_of: g.edges().to_vec() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    /// Vertex of the base graph this node copies.
    pub origin: usize,
    pub parent: Option<usize>,
    /// Edge id (in the base graph) of the edge to the parent.
    pub parent_edge: Option<usize>,
    pub depth: usize,
    pub children: Vec<usize>,
}

/// Rooted tree whose nodes are labelled by vertices of a base graph.
/// Node 0 is the root and parents always precede children.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathTree {
    pub nodes: Vec<TreeNode>,
    pub base_n: usize,
    pub base_m: usize,
}

impl PathTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes that copy base vertex `v`.
    pub fn copies_of_vertex(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.nodes[i].origin == v).collect()
    }

    /// Child nodes whose parent edge copies base edge `e`; each identifies one tree edge.
    pub fn copies_of_edge(&self, e: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.nodes[i].parent_edge == Some(e)).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.nodes
            .iter()
            .map(|nd| nd.children.len() + usize::from(nd.parent.is_some()))
            .max()
            .unwrap_or(0)
    }

    /// The tree as a graph on node ids; tree edge `(parent(c), c)` gets id `c - 1`.
    pub fn to_graph(&self) -> Graph {
        let edges: Vec<(usize, usize)> =
            (1..self.len()).map(|c| (self.nodes[c].parent.unwrap(), c)).collect();
        Graph::new(self.len(), &edges).expect("tree edges are valid")
    }

    /// Roots a tree graph at `r`; node ids follow breadth-first order.
    pub fn from_tree(g: &Graph, r: usize) -> Result<PathTree> {
        if r >= g.n() {
            return Err(Error::VertexOutOfRange { vertex: r, n: g.n() });
        }
        if g.m() + 1 != g.n() || !g.is_connected() {
            return Err(Error::NotATree);
        }
        path_tree_capped(g, r, g.n())
    }
}

/// Tree of self-avoiding walks from `r`, built breadth first with children in
/// ascending neighbor order.
pub fn path_tree(g: &Graph, r: usize) -> Result<PathTree> {
    path_tree_capped(g, r, MAX_PATH_TREE_NODES)
}

pub fn path_tree_capped(g: &Graph, r: usize, cap: usize) -> Result<PathTree> {
    if r >= g.n() {
        return Err(Error::VertexOutOfRange { vertex: r, n: g.n() });
    }
    let mut nodes = vec![TreeNode { origin: r, parent: None, parent_edge: None, depth: 0, children: vec![] }];
    let mut queue = VecDeque::from([0usize]);
    let mut on_path = vec![false; g.n()];
    while let Some(x) = queue.pop_front() {
        on_path.iter_mut().for_each(|b| *b = false);
        let mut cur = Some(x);
        while let Some(c) = cur {
            on_path[nodes[c].origin] = true;
            cur = nodes[c].parent;
        }
        let u = nodes[x].origin;
        for &w in g.neighbors(u) {
            if on_path[w] {
                continue;
            }
            if nodes.len() >= cap {
                return Err(Error::PathTreeTooLarge(cap));
            }
            let id = nodes.len();
            nodes.push(TreeNode {
                origin: w,
                parent: Some(x),
                parent_edge: g.edge_id(u, w),
                depth: nodes[x].depth + 1,
                children: vec![],
            });
            nodes[x].children.push(id);
            queue.push_back(id);
        }
    }
    Ok(PathTree { nodes, base_n: g.n(), base_m: g.m() })
}

/// Connected components of the subgraph induced by `set`, each sorted ascending.
pub fn components_within(g: &Graph, set: &[usize]) -> Result<Vec<Vec<usize>>> {
    let mut inside = vec![false; g.n()];
    for &v in set {
        if v >= g.n() {
            return Err(Error::VertexOutOfRange { vertex: v, n: g.n() });
        }
        inside[v] = true;
    }
    let mut seen = vec![false; g.n()];
    let mut comps = Vec::new();
    let mut sorted: Vec<usize> = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &s in &sorted {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if inside[w] && !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    Ok(comps)
}

/// Component of `v` inside the vertex mask `set` (empty when `v` is outside).
pub fn component_mask(adj: &[u64], set: u64, v: usize) -> u64 {
    if set >> v & 1 == 0 {
        return 0;
    }
    let mut comp = 1u64 << v;
    let mut frontier = comp;
    while frontier != 0 {
        let mut next = 0u64;
        let mut f = frontier;
        while f != 0 {
            let u = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= adj[u];
        }
        next &= set & !comp;
        comp |= next;
        frontier = next;
    }
    comp
}

/// Splits a vertex mask into its connected components.
pub fn components_mask(adj: &[u64], set: u64) -> Vec<u64> {
    let mut rest = set;
    let mut out = Vec::new();
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        let c = component_mask(adj, set, v);
        out.push(c);
        rest &= !c;
    }
    out
}

/// Number of vertex sets of size `k` that contain `v` and induce a connected subgraph.
pub fn count_connected_supersets(g: &Graph, v: usize, k: usize) -> Result<u64> {
    if v >= g.n() {
        return Err(Error::VertexOutOfRange { vertex: v, n: g.n() });
    }
    let adj = g.adjacency_masks()?;
    if k == 0 || k > g.n() {
        return Ok(0);
    }
    let mut level: HashSet<u64> = HashSet::from([1u64 << v]);
    for _ in 1..k {
        let mut next = HashSet::new();
        for &s in &level {
            let mut bd = s.iter_bits().fold(0u64, |acc, u| acc | adj[u]) & !s;
            while bd != 0 {
                let w = bd.trailing_zeros();
                bd &= bd - 1;
                next.insert(s | 1u64 << w);
            }
        }
        level = next;
    }
    Ok(level.len() as u64)
}

/// Upper bound `(e Delta)^(k-1)` on the number of connected `k`-sets through a vertex.
pub fn connected_set_bound(max_degree: usize, k: usize) -> f64 {
    (std::f64::consts::E * max_degree as f64).powi(k as i32 - 1)
}

/// Exact probability, as `(count, total)` and as a float, that the component
/// of `v` inside a uniform `ell`-subset has exactly `k` vertices.
pub fn component_size_probability(g: &Graph, v: usize, ell: usize, k: usize) -> Result<(u64, u64, f64)> {
    if v >= g.n() {
        return Err(Error::VertexOutOfRange { vertex: v, n: g.n() });
    }
    let n = g.n();
    if ell > n {
        return Err(Error::ParameterOutOfRange(format!("ell = {ell} exceeds n = {n}")));
    }
    let total = binomial(n as u64, ell as u64);
    if total > MAX_SUBSETS {
        return Err(Error::InstanceTooLarge(format!("C({n},{ell}) = {total} subsets")));
    }
    let adj = g.adjacency_masks()?;
    let mut count = 0u64;
    for_each_subset_of_size(n, ell, |s| {
        if (component_mask(&adj, s, v).count_ones() as usize) == k {
            count += 1;
        }
    });
    Ok((count, total, count as f64 / total as f64))
}

/// Upper bound `(ell/n) (2 e Delta theta)^(k-1)` with `theta = ell/n`.
pub fn component_size_bound(n: usize, ell: usize, max_degree: usize, k: usize) -> f64 {
    let theta = ell as f64 / n as f64;
    theta * (2.0 * std::f64::consts::E * max_degree as f64 * theta).powi(k as i32 - 1)
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r.min(u64::MAX as u128) as u64
}

/// Calls `f` on every `k`-subset of `0..n` as a bitmask (Gosper's hack).
pub fn for_each_subset_of_size(n: usize, k: usize, mut f: impl FnMut(u64)) {
    assert!(n <= 63, "subset enumeration limited to 63 elements");
    if k > n {
        return;
    }
    if k == 0 {
        f(0);
        return;
    }
    let mut s: u64 = (1u64 << k) - 1;
    let limit = 1u64 << n;
    while s < limit {
        f(s);
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
}

pub trait BitIter {
    fn iter_bits(self) -> BitIterator;
}

impl BitIter for u64 {
    fn iter_bits(self) -> BitIterator {
        BitIterator(self)
    }
}

pub struct BitIterator(u64);

impl Iterator for BitIterator {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

pub mod generators {
    use super::*;

    pub fn empty(n: usize) -> Graph {
        Graph::new(n, &[]).unwrap()
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Result<Graph> {
        if n < 3 {
            return Err(Error::ParameterOutOfRange(format!("cycle needs n >= 3, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges)
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::new(leaves + 1, &edges).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::new(n, &edges).unwrap()
    }

    /// Complete binary tree with `depth` levels below the root.
    pub fn binary_tree(depth: usize) -> Graph {
        let n = (1usize << (depth + 1)) - 1;
        let edges: Vec<_> = (1..n).map(|c| ((c - 1) / 2, c)).collect();
        Graph::new(n, &edges).unwrap()
    }

    /// Uniform `d`-regular graph via the pairing model with rejection.
    pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
        if d >= n || (n * d) % 2 == 1 {
            return Err(Error::ParameterOutOfRange(format!("no {d}-regular graph on {n} vertices")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            let mut points: Vec<usize> = (0..n * d).map(|i| i / d).collect();
            for i in (1..points.len()).rev() {
                let j = rng.random_range(0..=i);
                points.swap(i, j);
            }
            let edges: Vec<_> = points.chunks(2).map(|p| (p[0], p[1])).collect();
            if let Ok(g) = Graph::new(n, &edges) {
                return Ok(g);
            }
        }
        Err(Error::ParameterOutOfRange(format!("pairing model failed for n = {n}, d = {d}")))
    }

    /// Erdos-Renyi graph `G(n, p)`.
    pub fn random_gnp(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(n, &edges).unwrap()
    }

    /// Connected `G(n, p)` sample, resampling until connected.
    pub fn random_connected(n: usize, p: f64, seed: u64) -> Graph {
        let mut s = seed;
        loop {
            let g = random_gnp(n, p, s);
            if g.is_connected() {
                return g;
            }
            s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
        }
    }
}

pub mod catalog {
    //! Isomorphism classes of small graphs.
    use super::*;

    fn pair_index(n: usize, i: usize, j: usize) -> usize {
        let (a, b) = (i.min(j), i.max(j));
        a * n - a * (a + 1) / 2 + (b - a - 1)
    }

    fn code(n: usize, edges: &[(usize, usize)], label: &[usize]) -> u64 {
        edges.iter().fold(0u64, |acc, &(u, v)| acc | 1u64 << pair_index(n, label[u], label[v]))
    }

    /// Canonical code: minimum edge code over labelings that order vertices by degree.
    pub fn canonical_code(g: &Graph) -> u64 {
        let n = g.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| g.degree(v));
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &v in &order {
            match classes.last_mut() {
                Some(c) if g.degree(c[0]) == g.degree(v) => c.push(v),
                _ => classes.push(vec![v]),
            }
        }
        let mut best = u64::MAX;
        let mut label = vec![0usize; n];
        fn rec(
            ci: usize,
            offset: usize,
            classes: &mut Vec<Vec<usize>>,
            label: &mut Vec<usize>,
            g: &Graph,
            best: &mut u64,
        ) {
            if ci == classes.len() {
                *best = (*best).min(code(g.n(), g.edges(), label));
                return;
            }
            let len = classes[ci].len();
            permute(ci, 0, len, offset, classes, label, g, best);
        }
        #[allow(clippy::too_many_arguments)]
        fn permute(
            ci: usize,
            k: usize,
            len: usize,
            offset: usize,
            classes: &mut Vec<Vec<usize>>,
            label: &mut Vec<usize>,
            g: &Graph,
            best: &mut u64,
        ) {
            if k == len {
                for (i, &v) in classes[ci].iter().enumerate() {
                    label[v] = offset + i;
                }
                rec(ci + 1, offset + len, classes, label, g, best);
                return;
            }
            for i in k..len {
                classes[ci].swap(k, i);
                permute(ci, k + 1, len, offset, classes, label, g, best);
                classes[ci].swap(k, i);
            }
        }
        rec(0, 0, &mut classes, &mut label, g, &mut best);
        best
    }

    /// One representative per isomorphism class of graphs on exactly `n` vertices.
    pub fn all_graphs(n: usize) -> Vec<Graph> {
        assert!(n <= 8, "catalog limited to 8 vertices");
        let mut layer = vec![generators::empty(n.min(1))];
        if n == 0 {
            return vec![generators::empty(0)];
        }
        for k in 2..=n {
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for g in &layer {
                for nb in 0u64..(1u64 << (k - 1)) {
                    let mut edges = g.edges().to_vec();
                    edges.extend(nb.iter_bits().map(|u| (u, k - 1)));
                    let h = Graph::new(k, &edges).unwrap();
                    if seen.insert(canonical_code(&h)) {
                        next.push(h);
                    }
                }
            }
            layer = next;
        }
        layer
    }

    pub fn connected_graphs(n: usize) -> Vec<Graph> {
        all_graphs(n).into_iter().filter(Graph::is_connected).collect()
    }
}
