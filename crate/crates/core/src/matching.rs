//! Monomer-dimer machinery: the multivariate matching polynomial, pinning
//! reduction, pairwise edge influences on graphs and trees, the path-tree
//! reduction and the total-influence bounds for trees.
//!
//! Influence convention: `I(e -> f) = P(f matched | e matched) - P(f matched | e unmatched)`.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{path_tree_capped, Graph, PathTree, MAX_PATH_TREE_NODES};
use crate::util::ksum;

/// Memoized evaluation of `M_G(x)` on vertex-induced subgraphs of `G`.
#[derive(Debug, Clone)]
pub struct MatchingPolynomial {
    n: usize,
    adj: Vec<u64>,
    x: Vec<f64>,
    edges: Vec<(usize, usize)>,
    memo: HashMap<u64, f64>,
}

impl MatchingPolynomial {
    pub fn new(g: &Graph, x: &[f64]) -> Result<Self> {
        if x.len() != g.m() {
            return Err(Error::ParameterOutOfRange(format!("{} activities for {} edges", x.len(), g.m())));
        }
        if let Some(&bad) = x.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::NonPositiveParameter { name: "x".into(), value: bad });
        }
        let adj = g.adjacency_masks()?;
        let n = g.n();
        let mut xm = vec![0.0; n * n];
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            xm[u * n + v] = x[i];
            xm[v * n + u] = x[i];
        }
        Ok(MatchingPolynomial { n, adj, x: xm, edges: g.edges().to_vec(), memo: HashMap::new() })
    }

    pub fn uniform(g: &Graph, lambda: f64) -> Result<Self> {
        Self::new(g, &vec![lambda; g.m()])
    }

    pub fn full_mask(&self) -> u64 {
        if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 }
    }

    fn act(&self, u: usize, v: usize) -> f64 {
        self.x[u * self.n + v]
    }

    /// `M` of the subgraph induced by `mask`, by deleting the lowest vertex.
    pub fn eval(&mut self, mask: u64) -> f64 {
        if mask & (mask.wrapping_sub(1)) == 0 {
            return 1.0;
        }
        if let Some(&v) = self.memo.get(&mask) {
            return v;
        }
        let r = mask.trailing_zeros() as usize;
        let rest = mask & !(1u64 << r);
        let mut terms = vec![self.eval(rest)];
        let mut nb = self.adj[r] & rest;
        while nb != 0 {
            let v = nb.trailing_zeros() as usize;
            nb &= nb - 1;
            terms.push(self.act(r, v) * self.eval(rest & !(1u64 << v)));
        }
        let val = ksum(terms);
        self.memo.insert(mask, val);
        val
    }

    pub fn total(&mut self) -> f64 {
        self.eval(self.full_mask())
    }

    fn pair(&self, e: usize) -> u64 {
        let (u, v) = self.edges[e];
        1u64 << u | 1u64 << v
    }

    /// `M` of the induced subgraph on `mask` with edge `e` removed.
    fn eval_without(&mut self, mask: u64, e: usize) -> f64 {
        let p = self.pair(e);
        if mask & p != p {
            return self.eval(mask);
        }
        let (u, v) = self.edges[e];
        self.eval(mask) - self.act(u, v) * self.eval(mask & !p)
    }

    /// `P(f matched)` within the induced subgraph on `mask`, optionally with edge `without` removed.
    fn prob_in(&mut self, mask: u64, f: usize, without: Option<usize>) -> f64 {
        let p = self.pair(f);
        if mask & p != p || without == Some(f) {
            return 0.0;
        }
        let (u, v) = self.edges[f];
        let (num, den) = match without {
            None => (self.eval(mask & !p), self.eval(mask)),
            Some(e) => (self.eval_without(mask & !p, e), self.eval_without(mask, e)),
        };
        self.act(u, v) * num / den
    }

    /// `P(e matched) = x_e M(G - u - v) / M(G)`, equal to `x_e d/dx_e log M_G`.
    pub fn edge_probability(&mut self, e: usize) -> f64 {
        let full = self.full_mask();
        self.prob_in(full, e, None)
    }

    /// `P(v saturated)`.
    pub fn saturation(&mut self, v: usize) -> f64 {
        let full = self.full_mask();
        1.0 - self.eval(full & !(1u64 << v)) / self.eval(full)
    }

    /// Pairwise influence `I(e -> f)` in the whole graph.
    pub fn influence(&mut self, e: usize, f: usize) -> f64 {
        if e == f {
            return 0.0;
        }
        let full = self.full_mask();
        let pe = self.pair(e);
        self.prob_in(full & !pe, f, None) - self.prob_in(full, f, Some(e))
    }
}

/// Sum over all matchings by subset enumeration; an oracle for small graphs.
pub fn matching_poly_brute(g: &Graph, x: &[f64]) -> Result<f64> {
    let m = g.m();
    if m > 25 {
        return Err(Error::InstanceTooLarge(format!("{m} edges")));
    }
    let mut terms = Vec::new();
    'outer: for s in 0u64..1 << m {
        let mut used = 0u64;
        let mut w = 1.0;
        for i in (0..m).filter(|&i| s >> i & 1 == 1) {
            let (u, v) = g.edges()[i];
            let p = 1u64 << u | 1u64 << v;
            if used & p != 0 {
                continue 'outer;
            }
            used |= p;
            w *= x[i];
        }
        terms.push(w);
    }
    Ok(ksum(terms))
}

pub fn matching_poly(g: &Graph, x: &[f64]) -> Result<f64> {
    Ok(MatchingPolynomial::new(g, x)?.total())
}

/// Edge pinning: `Some(true)` matched, `Some(false)` unmatched.
pub type EdgePinning = Vec<Option<bool>>;

/// Graph on the same vertices whose monomer-dimer distribution is the
/// conditional under `pin`: drops unmatched edges and every edge touching a
/// matched one. Returns the graph and, per kept edge, its original index.
pub fn reduce_pinning(g: &Graph, pin: &[Option<bool>]) -> Result<(Graph, Vec<usize>)> {
    if pin.len() != g.m() {
        return Err(Error::ParameterOutOfRange(format!("pinning of length {} for {} edges", pin.len(), g.m())));
    }
    let mut covered = vec![false; g.n()];
    for (i, p) in pin.iter().enumerate() {
        if *p == Some(true) {
            let (u, v) = g.edges()[i];
            if covered[u] || covered[v] {
                return Err(Error::InfeasiblePinning);
            }
            covered[u] = true;
            covered[v] = true;
        }
    }
    let keep: Vec<usize> = (0..g.m())
        .filter(|&i| {
            let (u, v) = g.edges()[i];
            pin[i].is_none() && !covered[u] && !covered[v]
        })
        .collect();
    let edges: Vec<(usize, usize)> = keep.iter().map(|&i| g.edges()[i]).collect();
    Ok((Graph::new(g.n(), &edges)?, keep))
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeInfluenceTable {
    pub source: usize,
    /// `(target edge, I(source -> target))` over unpinned targets.
    pub entries: Vec<(usize, f64)>,
    pub total: f64,
}

impl EdgeInfluenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("edge,target,influence\n");
        for (f, v) in &self.entries {
            s.push_str(&format!("{},{},{:.17e}\n", self.source, f, v));
        }
        s
    }
}

/// Influences from edge `e` under `pin`, computed on the reduced graph.
pub fn edge_influence_table(g: &Graph, lambda: f64, e: usize, pin: &[Option<bool>]) -> Result<EdgeInfluenceTable> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveParameter { name: "lambda".into(), value: lambda });
    }
    if e >= g.m() || pin.get(e).copied().flatten().is_some() {
        return Err(Error::InfeasiblePinning);
    }
    let (h, keep) = reduce_pinning(g, pin)?;
    let eh = keep.iter().position(|&i| i == e).ok_or(Error::InfeasiblePinning)?;
    let mut poly = MatchingPolynomial::uniform(&h, lambda)?;
    let mut entries = Vec::new();
    for f in (0..g.m()).filter(|&f| f != e && pin[f].is_none()) {
        let v = match keep.iter().position(|&i| i == f) {
            Some(fh) => poly.influence(eh, fh),
            None => 0.0,
        };
        entries.push((f, v));
    }
    let total = ksum(entries.iter().map(|(_, v)| v.abs()));
    Ok(EdgeInfluenceTable { source: e, entries, total })
}

/// Edge influence matrix of the whole graph (zero diagonal).
pub fn influence_matrix(g: &Graph, lambda: f64) -> Result<DMatrix<f64>> {
    let mut poly = MatchingPolynomial::uniform(g, lambda)?;
    let m = g.m();
    Ok(DMatrix::from_fn(m, m, |e, f| poly.influence(e, f)))
}

/// Largest eigenvalue of the influence matrix, through the symmetric matrix
/// `V^{-1/2} Cov V^{-1/2} - I`, which is similar to it.
pub fn influence_lambda_max(g: &Graph, lambda: f64) -> Result<f64> {
    let m = g.m();
    if m == 0 {
        return Ok(0.0);
    }
    let mut poly = MatchingPolynomial::uniform(g, lambda)?;
    let p: Vec<f64> = (0..m).map(|e| poly.edge_probability(e)).collect();
    let sd: Vec<f64> = p.iter().map(|q| (q * (1.0 - q)).sqrt()).collect();
    let s = DMatrix::from_fn(m, m, |e, f| {
        if e == f {
            0.0
        } else {
            // Cov(e, f) = Var(e) I(e -> f)
            sd[e] * poly.influence(e, f) / sd[f]
        }
    });
    let s = (&s + s.transpose()) * 0.5;
    Ok(s.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// `min{2 lambda Delta, 2 sqrt(1 + lambda Delta)}`.
pub fn total_influence_bound(lambda: f64, max_degree: usize) -> f64 {
    let ld = lambda * max_degree as f64;
    (2.0 * ld).min(2.0 * (1.0 + ld).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct PinningSweep {
    pub lambda: f64,
    pub max_degree: usize,
    pub bound: f64,
    pub max_row_total: f64,
    pub max_eta: f64,
    /// Number of distinct reduced graphs examined.
    pub reduced_graphs: usize,
}

impl PinningSweep {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_row_total <= self.bound + tol && self.max_eta <= self.bound + tol
    }
}

/// Row totals and top eigenvalues of the influence matrix over every pinning.
/// Every conditional is the distribution of some edge-subgraph, and every
/// edge-subgraph arises from a pinning, so the sweep runs over edge subsets.
pub fn pinning_sweep(g: &Graph, lambda: f64) -> Result<PinningSweep> {
    let m = g.m();
    if m > 24 {
        return Err(Error::InstanceTooLarge(format!("2^{m} edge subsets")));
    }
    let max_degree = g.max_degree();
    let mut max_row_total: f64 = 0.0;
    let mut max_eta: f64 = 0.0;
    for mask in 1u64..1 << m {
        let h = g.edge_subgraph(|i| mask >> i & 1 == 1);
        let mut poly = MatchingPolynomial::uniform(&h, lambda)?;
        for e in 0..h.m() {
            let row = ksum((0..h.m()).map(|f| poly.influence(e, f).abs()));
            max_row_total = max_row_total.max(row);
        }
        max_eta = max_eta.max(influence_lambda_max(&h, lambda)?);
    }
    Ok(PinningSweep {
        lambda,
        max_degree,
        bound: total_influence_bound(lambda, max_degree),
        max_row_total,
        max_eta,
        reduced_graphs: (1usize << m) - 1,
    })
}

/// Log-domain evaluation of the matching polynomial on a forest with some
/// vertices and edges removed.
#[derive(Debug, Clone)]
pub struct Forest<'a> {
    g: &'a Graph,
    x: &'a [f64],
}

impl<'a> Forest<'a> {
    pub fn new(g: &'a Graph, x: &'a [f64]) -> Result<Self> {
        if x.len() != g.m() {
            return Err(Error::ParameterOutOfRange(format!("{} activities for {} edges", x.len(), g.m())));
        }
        let comps = crate::graph::components_within(g, &(0..g.n()).collect::<Vec<_>>())?.len();
        if g.m() + comps != g.n() {
            return Err(Error::NotATree);
        }
        Ok(Forest { g, x })
    }

    /// `log M` of the forest minus the removed vertices and edges.
    pub fn log_m(&self, vdel: &[bool], edel: &[bool]) -> f64 {
        let n = self.g.n();
        let mut seen = vdel.to_vec();
        let mut ratio = vec![1.0; n];
        let mut log_a = vec![0.0; n];
        let mut total = Vec::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut order = vec![(root, usize::MAX, usize::MAX)];
            let mut i = 0;
            while i < order.len() {
                let (u, _, _) = order[i];
                for &w in self.g.neighbors(u) {
                    let id = self.g.edge_id(u, w).unwrap();
                    if !seen[w] && !edel[id] {
                        seen[w] = true;
                        order.push((w, u, id));
                    }
                }
                i += 1;
            }
            let mut acc: Vec<Vec<f64>> = vec![Vec::new(); n];
            let mut lacc: Vec<Vec<f64>> = vec![Vec::new(); n];
            for &(u, p, id) in order.iter().rev() {
                ratio[u] = 1.0 / (1.0 + ksum(acc[u].drain(..)));
                log_a[u] = ksum(lacc[u].drain(..)) - ratio[u].ln();
                if p != usize::MAX {
                    acc[p].push(self.x[id] * ratio[u]);
                    lacc[p].push(log_a[u]);
                }
            }
            total.push(log_a[root]);
        }
        ksum(total)
    }

    /// `P(f matched)` in the forest minus the removed vertices and edges.
    pub fn edge_probability(&self, vdel: &[bool], edel: &[bool], f: usize) -> f64 {
        let (u, v) = self.g.edges()[f];
        if vdel[u] || vdel[v] || edel[f] {
            return 0.0;
        }
        let mut vd = vdel.to_vec();
        vd[u] = true;
        vd[v] = true;
        self.x[f] * (self.log_m(&vd, edel) - self.log_m(vdel, edel)).exp()
    }

    /// `I(e -> f)` in the forest.
    pub fn influence(&self, e: usize, f: usize) -> f64 {
        if e == f {
            return 0.0;
        }
        let n = self.g.n();
        let m = self.g.m();
        let (a, b) = self.g.edges()[e];
        let mut vd = vec![false; n];
        vd[a] = true;
        vd[b] = true;
        let none = vec![false; m];
        let mut ed = vec![false; m];
        ed[e] = true;
        self.edge_probability(&vd, &none, f) - self.edge_probability(&vec![false; n], &ed, f)
    }
}

fn check_tree(t: &Graph) -> Result<()> {
    if t.n() == 0 || t.m() + 1 != t.n() || !t.is_connected() {
        return Err(Error::NotATree);
    }
    Ok(())
}

/// Parent pointers and breadth-first order of a tree rooted at `root`.
fn root_tree(t: &Graph, root: usize) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut parent = vec![None; t.n()];
    let mut seen = vec![false; t.n()];
    let mut order = vec![root];
    seen[root] = true;
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        for &w in t.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(u);
                order.push(w);
            }
        }
        i += 1;
    }
    (parent, order)
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeRecursionState {
    pub root: usize,
    pub lambda: f64,
    pub parent: Vec<Option<usize>>,
    /// `mu_{T(u)}(u unmatched)` for the subtree hanging at each vertex.
    pub unmatched: Vec<f64>,
    pub max_residual: f64,
}

/// Bottom-up unmatched probabilities `mu(u bar) = 1/(1 + lambda sum_children mu(c bar))`.
pub fn tree_recursion(t: &Graph, root: usize, lambda: f64) -> Result<TreeRecursionState> {
    check_tree(t)?;
    if root >= t.n() {
        return Err(Error::VertexOutOfRange { vertex: root, n: t.n() });
    }
    let (parent, order) = root_tree(t, root);
    let mut sums = vec![Vec::new(); t.n()];
    let mut unmatched = vec![1.0; t.n()];
    let mut max_residual: f64 = 0.0;
    for &u in order.iter().rev() {
        let s = ksum(sums[u].drain(..));
        unmatched[u] = 1.0 / (1.0 + lambda * s);
        max_residual = max_residual.max((unmatched[u] * (1.0 + lambda * s) - 1.0).abs());
        if let Some(p) = parent[u] {
            sums[p].push(unmatched[u]);
        }
    }
    Ok(TreeRecursionState { root, lambda, parent, unmatched, max_residual })
}

/// Edge sequence `e = e_1, ..., e_{k+1} = f` along the tree path.
pub fn edge_path(t: &Graph, e: usize, f: usize) -> Result<Vec<usize>> {
    check_tree(t)?;
    if e == f || e >= t.m() || f >= t.m() {
        return Err(Error::ParameterOutOfRange(format!("edges {e} and {f}")));
    }
    let (a, b) = t.edges()[e];
    let (c, d) = t.edges()[f];
    let (parent, _) = root_tree(t, a);
    // the deeper endpoint of f when rooted at a
    let far = if parent[d] == Some(c) { d } else { c };
    let mut verts = vec![far];
    let mut u = far;
    while let Some(p) = parent[u] {
        verts.push(p);
        u = p;
    }
    verts.reverse();
    let mut path = Vec::new();
    if verts.get(1) != Some(&b) {
        path.push(e);
    }
    for w in verts.windows(2) {
        path.push(t.edge_id(w[0], w[1]).unwrap());
    }
    Ok(path)
}

/// Direct tree influence against the product of consecutive-edge influences.
pub fn influence_factorization_check(t: &Graph, lambda: f64, e: usize, f: usize) -> Result<(f64, f64)> {
    let x = vec![lambda; t.m()];
    let forest = Forest::new(t, &x)?;
    let path = edge_path(t, e, f)?;
    let rhs = path.windows(2).map(|w| forest.influence(w[0], w[1])).product();
    Ok((forest.influence(e, f), rhs))
}

/// The path tree as a graph together with activities copied from `x`.
pub fn path_tree_with_activities(g: &Graph, r: usize, x: &[f64]) -> Result<(PathTree, Graph, Vec<f64>)> {
    let pt = path_tree_capped(g, r, MAX_PATH_TREE_NODES)?;
    let tg = pt.to_graph();
    let tx = (1..pt.len()).map(|c| x[pt.nodes[c].parent_edge.unwrap()]).collect();
    Ok((pt, tg, tx))
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphTreeRow {
    pub target: usize,
    pub copies: usize,
    pub graph_influence: f64,
    pub tree_sum: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphTreeReport {
    pub root: usize,
    pub source: usize,
    pub tree_nodes: usize,
    pub rows: Vec<GraphTreeRow>,
    pub graph_marginal: f64,
    pub tree_marginal: f64,
}

impl GraphTreeReport {
    pub fn max_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.graph_influence - r.tree_sum).abs())
            .fold((self.graph_marginal - self.tree_marginal).abs(), f64::max)
    }
}

/// Compares `I_G(e -> f)` with the sum of `I_T(e -> f')` over the copies of `f`
/// in the path tree rooted at an endpoint `r` of `e`.
pub fn graph_to_tree_check(g: &Graph, r: usize, x: &[f64], e: usize) -> Result<GraphTreeReport> {
    if e >= g.m() || (g.edges()[e].0 != r && g.edges()[e].1 != r) {
        return Err(Error::ParameterOutOfRange(format!("edge {e} is not incident to {r}")));
    }
    let (pt, tg, tx) = path_tree_with_activities(g, r, x)?;
    let forest = Forest::new(&tg, &tx)?;
    let root_child = pt.nodes[0].children.iter().copied().find(|&c| pt.nodes[c].parent_edge == Some(e)).unwrap();
    let et = root_child - 1;
    let mut poly = MatchingPolynomial::new(g, x)?;
    let rows = (0..g.m())
        .filter(|&f| f != e)
        .map(|f| {
            let copies = pt.copies_of_edge(f);
            let tree_sum = ksum(copies.iter().map(|&c| forest.influence(et, c - 1)));
            GraphTreeRow { target: f, copies: copies.len(), graph_influence: poly.influence(e, f), tree_sum }
        })
        .collect();
    let nt = tg.n();
    Ok(GraphTreeReport {
        root: r,
        source: e,
        tree_nodes: pt.len(),
        rows,
        graph_marginal: poly.edge_probability(e),
        tree_marginal: forest.edge_probability(&vec![false; nt], &vec![false; tg.m()], et),
    })
}

pub fn graph_to_tree_check_uniform(g: &Graph, r: usize, lambda: f64, e: usize) -> Result<GraphTreeReport> {
    graph_to_tree_check(g, r, &vec![lambda; g.m()], e)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DivisibilityCheck {
    /// `M_G / M_{G-r}`.
    pub graph_ratio: f64,
    /// Same ratio for the path tree with shared activities.
    pub tree_ratio: f64,
    /// `log(Mbar_T / M_G)`.
    pub log_quotient: f64,
}

/// Ratio identity between a graph and its path tree at root `r`.
pub fn divisibility_check(g: &Graph, r: usize, x: &[f64]) -> Result<DivisibilityCheck> {
    let (_, tg, tx) = path_tree_with_activities(g, r, x)?;
    let forest = Forest::new(&tg, &tx)?;
    let mut poly = MatchingPolynomial::new(g, x)?;
    let full = poly.full_mask();
    let mg = poly.eval(full);
    let mgr = poly.eval(full & !(1u64 << r));
    let none_e = vec![false; tg.m()];
    let lt = forest.log_m(&vec![false; tg.n()], &none_e);
    let mut vd = vec![false; tg.n()];
    vd[0] = true;
    let ltr = forest.log_m(&vd, &none_e);
    Ok(DivisibilityCheck { graph_ratio: mg / mgr, tree_ratio: (lt - ltr).exp(), log_quotient: lt - mg.ln() })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRow {
    pub k: usize,
    /// `sum |I(e -> f)|` over `f` at distance `k` on each side of `e`.
    pub side_sums: [f64; 2],
    /// Largest product of saturation probabilities along a downward path of `k` vertices.
    pub max_products: [f64; 2],
    /// `min{(lambda Delta/(1 + lambda Delta))^k, g^floor(k/2)}`.
    pub level_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeBoundReport {
    pub source: usize,
    pub lambda: f64,
    pub max_degree: usize,
    pub total: f64,
    /// `2 sum_k max(max_products)`.
    pub majorant: f64,
    /// `2 sum_k level_bound` over the levels present in the tree.
    pub level_bound_sum: f64,
    pub bound: f64,
    pub levels: Vec<LevelRow>,
}

impl TreeBoundReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.total <= self.majorant + tol
            && self.majorant <= self.level_bound_sum + tol
            && self.level_bound_sum <= self.bound + tol
            && self.levels.iter().all(|l| {
                (0..2).all(|s| l.side_sums[s] <= l.max_products[s] + tol && l.max_products[s] <= l.level_bound + tol)
            })
    }
}

/// `1 - 2/(sqrt(1 + lambda Delta) + 1)`.
pub fn two_step_contraction(lambda: f64, max_degree: usize) -> f64 {
    1.0 - 2.0 / ((1.0 + lambda * max_degree as f64).sqrt() + 1.0)
}

/// `l1` norm of the gradient of the two-step log-marginal recursion at
/// grandchild values `p[i][j]`.
pub fn two_step_gradient_norm(lambda: f64, p: &[Vec<f64>]) -> f64 {
    let fi: Vec<f64> = p.iter().map(|row| 1.0 / (1.0 + lambda * row.iter().sum::<f64>())).collect();
    let f2 = 1.0 / (1.0 + lambda * fi.iter().sum::<f64>());
    ksum(p.iter().zip(&fi).flat_map(|(row, &a)| row.iter().map(move |&q| lambda * lambda * q * a * a * f2)))
}

/// Exact total influence of edge `e` in tree `t` with the intermediate majorants.
pub fn tree_total_influence_bound(t: &Graph, lambda: f64, e: usize) -> Result<TreeBoundReport> {
    check_tree(t)?;
    if e >= t.m() {
        return Err(Error::ParameterOutOfRange(format!("edge {e}")));
    }
    let x = vec![lambda; t.m()];
    let forest = Forest::new(t, &x)?;
    let max_degree = t.max_degree();
    let (a, b) = t.edges()[e];
    let cut = t.edge_subgraph(|i| i != e);
    let mut per_side: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut total_terms = Vec::new();
    for root in [a, b] {
        // BFS within the side, not crossing e
        let mut depth = vec![usize::MAX; t.n()];
        let mut parent = vec![None; t.n()];
        let mut order = vec![root];
        depth[root] = 0;
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            for &w in cut.neighbors(u) {
                if depth[w] == usize::MAX {
                    depth[w] = depth[u] + 1;
                    parent[w] = Some(u);
                    order.push(w);
                    q.push_back(w);
                }
            }
        }
        let maxd = order.iter().map(|&u| depth[u]).max().unwrap();
        let mut sums = vec![Vec::new(); maxd + 2];
        for &w in &order[1..] {
            let f = t.edge_id(w, parent[w].unwrap()).unwrap();
            let v = forest.influence(e, f).abs();
            sums[depth[w]].push(v);
            total_terms.push(v);
        }
        let side_sums: Vec<f64> = sums.into_iter().map(ksum).collect();
        // saturation probabilities in the hanging subtrees
        let mut child_sum = vec![Vec::new(); t.n()];
        let mut sat = vec![0.0; t.n()];
        let mut best = vec![vec![0.0; maxd + 2]; t.n()];
        for &u in order.iter().rev() {
            let unmatched = 1.0 / (1.0 + lambda * ksum(child_sum[u].drain(..)));
            sat[u] = 1.0 - unmatched;
            if let Some(p) = parent[u] {
                child_sum[p].push(unmatched);
            }
        }
        for &u in order.iter().rev() {
            best[u][1] = sat[u];
            for k in 2..=maxd + 1 {
                let m = cut
                    .neighbors(u)
                    .iter()
                    .filter(|&&c| parent[c] == Some(u))
                    .map(|&c| best[c][k - 1])
                    .fold(0.0, f64::max);
                best[u][k] = sat[u] * m;
            }
        }
        per_side.push((side_sums, best[root].clone()));
    }
    let levels_n = per_side.iter().map(|s| s.0.len()).max().unwrap();
    let r = lambda * max_degree as f64 / (1.0 + lambda * max_degree as f64);
    let g2 = two_step_contraction(lambda, max_degree);
    let levels: Vec<LevelRow> = (1..levels_n)
        .map(|k| {
            let get = |v: &Vec<f64>| v.get(k).copied().unwrap_or(0.0);
            LevelRow {
                k,
                side_sums: [get(&per_side[0].0), get(&per_side[1].0)],
                max_products: [get(&per_side[0].1), get(&per_side[1].1)],
                level_bound: r.powi(k as i32).min(g2.powi((k / 2) as i32)),
            }
        })
        .collect();
    Ok(TreeBoundReport {
        source: e,
        lambda,
        max_degree,
        total: ksum(total_terms),
        majorant: 2.0 * ksum(levels.iter().map(|l| l.max_products[0].max(l.max_products[1]))),
        level_bound_sum: 2.0 * ksum(levels.iter().map(|l| l.level_bound)),
        bound: total_influence_bound(lambda, max_degree),
        levels,
    })
}

/// `(vertex, P(saturated), lambda Delta/(1 + lambda Delta))` for each vertex.
pub fn saturation_check(g: &Graph, lambda: f64) -> Result<Vec<(usize, f64, f64)>> {
    let mut poly = MatchingPolynomial::uniform(g, lambda)?;
    let ld = lambda * g.max_degree() as f64;
    Ok((0..g.n()).map(|v| (v, poly.saturation(v), ld / (1.0 + ld))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators;

    #[test]
    fn polynomial_examples() {
        assert!((matching_poly(&generators::path(2), &[2.5]).unwrap() - 3.5).abs() < 1e-15);
        assert_eq!(matching_poly(&generators::path(3), &[1.0, 1.0]).unwrap(), 3.0);
        let c4 = generators::cycle(4).unwrap();
        assert_eq!(matching_poly(&c4, &[1.0; 4]).unwrap(), 7.0);
        assert_eq!(matching_poly_brute(&c4, &[1.0; 4]).unwrap(), 7.0);
        assert_eq!(matching_poly(&generators::empty(3), &[]).unwrap(), 1.0);
    }

    #[test]
    fn p3_influence_table() {
        let p3 = generators::path(3);
        let t = edge_influence_table(&p3, 1.0, 0, &[None, None]).unwrap();
        assert!((t.entries[0].1 + 0.5).abs() < 1e-15);
        assert!((t.total - 0.5).abs() < 1e-15);
        assert!(t.to_csv().starts_with("edge,target,influence\n0,1,"));
    }

    #[test]
    fn disconnected_edges_do_not_interact() {
        let g = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let t = edge_influence_table(&g, 1.0, 0, &[None, None]).unwrap();
        assert_eq!(t.entries[0].1, 0.0);
    }

    #[test]
    fn pinning_reduction() {
        let p4 = generators::path(4);
        let (h, keep) = reduce_pinning(&p4, &[Some(true), None, None]).unwrap();
        assert_eq!(keep, vec![2]);
        assert_eq!(h.m(), 1);
        assert_eq!(reduce_pinning(&p4, &[Some(true), Some(true), None]), Err(Error::InfeasiblePinning));
        assert!(matches!(edge_influence_table(&p4, 1.0, 1, &[Some(true), None, None]), Err(Error::InfeasiblePinning)));
    }

    #[test]
    fn star_row_total() {
        let s = generators::star(3);
        let t = edge_influence_table(&s, 1.0, 0, &[None; 3]).unwrap();
        assert!(t.total <= 4.0);
    }

    #[test]
    fn tree_recursion_examples() {
        let single = tree_recursion(&generators::empty(1), 0, 1.0).unwrap();
        assert_eq!(single.unmatched[0], 1.0);
        let star = tree_recursion(&generators::star(2), 0, 1.0).unwrap();
        assert!((star.unmatched[0] - 1.0 / 3.0).abs() < 1e-15);
        let p4 = generators::path(4);
        let st = tree_recursion(&p4, 0, 1.0).unwrap();
        // matchings of P4 leaving vertex 0 free: {}, {12}, {23}
        assert!((st.unmatched[0] - 3.0 / 5.0).abs() < 1e-15);
        assert!(st.max_residual < 1e-12);
        assert_eq!(tree_recursion(&generators::cycle(3).unwrap(), 0, 1.0).unwrap_err(), Error::NotATree);
    }

    #[test]
    fn forest_matches_vertex_recursion() {
        let t = generators::binary_tree(3);
        let x: Vec<f64> = (0..t.m()).map(|i| 0.3 + 0.1 * i as f64).collect();
        let forest = Forest::new(&t, &x).unwrap();
        let mut poly = MatchingPolynomial::new(&t, &x).unwrap();
        let lm = forest.log_m(&vec![false; t.n()], &vec![false; t.m()]);
        assert!((lm - poly.total().ln()).abs() < 1e-12);
        for e in 0..t.m() {
            for f in 0..t.m() {
                assert!((forest.influence(e, f) - poly.influence(e, f)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factorization_on_p4_and_binary_tree() {
        let (l, r) = influence_factorization_check(&generators::path(4), 1.0, 0, 2).unwrap();
        assert!((l - r).abs() < 1e-12 && l.abs() > 0.0);
        let t = generators::binary_tree(2);
        for e in 0..t.m() {
            for f in 0..t.m() {
                if e != f {
                    let (l, r) = influence_factorization_check(&t, 1.0, e, f).unwrap();
                    assert!((l - r).abs() < 1e-12, "{e} {f}");
                }
            }
        }
    }

    #[test]
    fn path_tree_reduction_on_triangle() {
        let k3 = generators::complete(3);
        for r in 0..3 {
            for e in (0..3).filter(|&e| k3.edges()[e].0 == r || k3.edges()[e].1 == r) {
                let rep = graph_to_tree_check_uniform(&k3, r, 1.0, e).unwrap();
                assert_eq!(rep.tree_nodes, 5);
                assert!(rep.max_error() < 1e-12);
                // the far edge appears twice, the other edge at the root once
                let mut copies: Vec<usize> = rep.rows.iter().map(|row| row.copies).collect();
                copies.sort();
                assert_eq!(copies, vec![1, 2]);
            }
        }
    }

    #[test]
    fn divisibility_on_c4() {
        let c4 = generators::cycle(4).unwrap();
        let x = [0.5, 1.5, 2.0, 0.7];
        let d = divisibility_check(&c4, 0, &x).unwrap();
        assert!((d.graph_ratio - d.tree_ratio).abs() < 1e-12);
    }

    #[test]
    fn tree_bound_examples() {
        let p3 = generators::path(3);
        let rep = tree_total_influence_bound(&p3, 1.0, 0).unwrap();
        assert!((rep.total - 0.5).abs() < 1e-15);
        assert!((rep.bound - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(rep.holds(1e-12));
        let single = tree_total_influence_bound(&generators::path(2), 1.0, 0).unwrap();
        assert_eq!(single.total, 0.0);
        let bt = generators::binary_tree(4);
        let rep = tree_total_influence_bound(&bt, 2.0, 0).unwrap();
        assert!((rep.bound - 2.0 * 7f64.sqrt()).abs() < 1e-12);
        assert!(rep.holds(1e-12), "{rep:?}");
    }

    #[test]
    fn gradient_norm_attains_bound() {
        // all grandchildren at the maximizing value lambda d p = sqrt(1 + lambda d)
        let (lambda, d) = (1.5, 3usize);
        let ld = lambda * d as f64;
        let p = (1.0 + ld).sqrt() / ld;
        let norm = two_step_gradient_norm(lambda, &vec![vec![p; d]; d]);
        assert!((norm - two_step_contraction(lambda, d)).abs() < 1e-12);
    }

    #[test]
    fn saturation_bounded() {
        for (_, s, b) in saturation_check(&generators::complete(4), 2.0).unwrap() {
            assert!(s <= b);
        }
    }
}
