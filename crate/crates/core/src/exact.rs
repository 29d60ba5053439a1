//! Exact Gibbs distributions by enumeration, conditioning, entropy functionals
//! and influence matrices over all pinnings.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg;
use crate::models::SpinSystem;
use crate::util::{entropy_term, ksum, par_map};

/// Cap on `q^n` raw configurations scanned by [`ExactDistribution::enumerate`].
pub const MAX_RAW_STATES: f64 = 2e7;
/// Cap on the total number of (subset, boundary) pairs visited by pinning sweeps.
pub const MAX_PINNINGS: usize = 1_000_000;
/// Imaginary parts above this are reported as a failure of real spectrum.
pub const IMAG_TOLERANCE: f64 = 1e-8;

pub type Config = Vec<u8>;

/// Partial assignment of spins; `None` marks a free vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Pinning(pub Vec<Option<u8>>);

impl Pinning {
    pub fn empty(n: usize) -> Self {
        Pinning(vec![None; n])
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, u8)]) -> Result<Self> {
        let mut p = Pinning::empty(n);
        for &(v, s) in pairs {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            p.0[v] = Some(s);
        }
        Ok(p)
    }

    pub fn is_pinned(&self, v: usize) -> bool {
        self.0[v].is_some()
    }

    pub fn free_vertices(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&v| self.0[v].is_none()).collect()
    }

    pub fn pinned_count(&self) -> usize {
        self.0.iter().filter(|x| x.is_some()).count()
    }

    fn agrees(&self, sigma: &[u8]) -> bool {
        self.0.iter().zip(sigma).all(|(p, &s)| p.map_or(true, |x| x == s))
    }
}

/// A Gibbs distribution (possibly conditioned) stored by its full support.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    graph: Graph,
    system: SpinSystem,
    support: Vec<Config>,
    weights: Vec<f64>,
    probs: Vec<f64>,
    z: f64,
    pinning: Pinning,
    index: HashMap<Config, usize>,
}

impl ExactDistribution {
    /// Enumerates every positive-weight configuration by depth-first search.
    pub fn enumerate(g: &Graph, sys: &SpinSystem) -> Result<Self> {
        let n = g.n();
        let raw = (sys.q as f64).powi(n as i32);
        if raw > MAX_RAW_STATES {
            return Err(Error::InstanceTooLarge(format!("{}^{} = {raw:e} configurations", sys.q, n)));
        }
        let mut support = Vec::new();
        let mut weights = Vec::new();
        let mut sigma = vec![0u8; n];
        fn dfs(
            v: usize,
            w: f64,
            g: &Graph,
            sys: &SpinSystem,
            sigma: &mut Vec<u8>,
            support: &mut Vec<Config>,
            weights: &mut Vec<f64>,
        ) {
            if v == g.n() {
                support.push(sigma.clone());
                weights.push(w);
                return;
            }
            for s in 0..sys.q {
                let mut ws = w * sys.h[s];
                for &u in g.neighbors(v) {
                    if u < v {
                        ws *= sys.a[s][sigma[u] as usize];
                    }
                }
                if ws > 0.0 {
                    sigma[v] = s as u8;
                    dfs(v + 1, ws, g, sys, sigma, support, weights);
                }
            }
        }
        dfs(0, 1.0, g, sys, &mut sigma, &mut support, &mut weights);
        Self::from_parts(g.clone(), sys.clone(), support, weights, Pinning::empty(n))
    }

    fn from_parts(
        graph: Graph,
        system: SpinSystem,
        support: Vec<Config>,
        weights: Vec<f64>,
        pinning: Pinning,
    ) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let z = ksum(weights.iter().copied());
        let probs = weights.iter().map(|w| w / z).collect();
        let index = support.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(ExactDistribution { graph, system, support, weights, probs, z, pinning, index })
    }

    fn subset(&self, idx: &[usize], pinning: Pinning) -> Result<Self> {
        let support = idx.iter().map(|&i| self.support[i].clone()).collect();
        let weights = idx.iter().map(|&i| self.weights[i]).collect();
        Self::from_parts(self.graph.clone(), self.system.clone(), support, weights, pinning)
    }

    /// Conditions on additional pinned spins.
    pub fn condition(&self, pairs: &[(usize, u8)]) -> Result<Self> {
        let mut pinning = self.pinning.clone();
        for &(v, s) in pairs {
            if v >= self.n() {
                return Err(Error::VertexOutOfRange { vertex: v, n: self.n() });
            }
            if let Some(old) = pinning.0[v] {
                if old != s {
                    return Err(Error::InfeasiblePinning);
                }
            }
            pinning.0[v] = Some(s);
        }
        let idx: Vec<usize> = (0..self.support.len()).filter(|&i| pinning.agrees(&self.support[i])).collect();
        if idx.is_empty() {
            return Err(Error::InfeasiblePinning);
        }
        self.subset(&idx, pinning)
    }

    pub fn condition_on(&self, pinning: &Pinning) -> Result<Self> {
        let pairs: Vec<(usize, u8)> =
            pinning.0.iter().enumerate().filter_map(|(v, s)| s.map(|s| (v, s))).collect();
        self.condition(&pairs)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn system(&self) -> &SpinSystem {
        &self.system
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn q(&self) -> usize {
        self.system.q
    }

    pub fn support(&self) -> &[Config] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn partition_function(&self) -> f64 {
        self.z
    }

    pub fn pinning(&self) -> &Pinning {
        &self.pinning
    }

    pub fn free_vertices(&self) -> Vec<usize> {
        self.pinning.free_vertices()
    }

    pub fn index_of(&self, sigma: &[u8]) -> Option<usize> {
        self.index.get(sigma).copied()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn marginal(&self, v: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.q()];
        for (s, p) in self.support.iter().zip(&self.probs) {
            m[s[v] as usize] += p;
        }
        m
    }

    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let (n, q) = (self.n(), self.q());
        let mut m = vec![vec![0.0; q]; n];
        for (s, p) in self.support.iter().zip(&self.probs) {
            for v in 0..n {
                m[v][s[v] as usize] += p;
            }
        }
        m
    }

    /// Groups support indices by their restriction to `keep` (other coordinates masked).
    pub fn group_by_restriction(&self, keep: &[bool]) -> Vec<(Config, Vec<usize>)> {
        let mut groups: HashMap<Config, usize> = HashMap::new();
        let mut out: Vec<(Config, Vec<usize>)> = Vec::new();
        for (i, s) in self.support.iter().enumerate() {
            let key: Config = s.iter().zip(keep).map(|(&x, &k)| if k { x } else { u8::MAX }).collect();
            match groups.get(&key) {
                Some(&g) => out[g].1.push(i),
                None => {
                    groups.insert(key.clone(), out.len());
                    out.push((key, vec![i]));
                }
            }
        }
        out
    }

    pub fn entropy(&self, f: &[f64]) -> Result<f64> {
        entropy(&self.probs, f)
    }

    pub fn variance(&self, f: &[f64]) -> Result<f64> {
        variance(&self.probs, f)
    }

    /// `mu[Ent_S f]`: expected entropy of `f` under the law of `S` given the rest.
    pub fn block_entropy(&self, f: &[f64], block: &[bool]) -> Result<f64> {
        self.block_functional(f, block, entropy)
    }

    /// `mu[Var_S f]`.
    pub fn block_variance(&self, f: &[f64], block: &[bool]) -> Result<f64> {
        self.block_functional(f, block, variance)
    }

    fn block_functional(&self, f: &[f64], block: &[bool], op: fn(&[f64], &[f64]) -> Result<f64>) -> Result<f64> {
        if f.len() != self.support.len() {
            return Err(Error::SupportMismatch);
        }
        let keep: Vec<bool> = block.iter().map(|b| !b).collect();
        let mut terms = Vec::new();
        for (_, idx) in self.group_by_restriction(&keep) {
            let mass = ksum(idx.iter().map(|&i| self.probs[i]));
            let p: Vec<f64> = idx.iter().map(|&i| self.probs[i] / mass).collect();
            let fv: Vec<f64> = idx.iter().map(|&i| f[i]).collect();
            terms.push(mass * op(&p, &fv)?);
        }
        Ok(ksum(terms))
    }

    /// Joint law of `(sigma_u, sigma_v)` for every ordered pair.
    fn pair_table(&self) -> Vec<Vec<Vec<f64>>> {
        let (n, q) = (self.n(), self.q());
        let mut t = vec![vec![vec![0.0; q * q]; n]; n];
        for (s, &p) in self.support.iter().zip(&self.probs) {
            for u in 0..n {
                let row = &mut t[u];
                for v in 0..n {
                    row[v][s[u] as usize * q + s[v] as usize] += p;
                }
            }
        }
        t
    }

    /// Pairwise influence matrix over feasible (free vertex, spin) pairs.
    pub fn influence_matrix(&self) -> Result<InfluenceMatrix> {
        let free = self.free_vertices();
        if free.len() < 2 {
            return Err(Error::TooFewFreeVertices);
        }
        let q = self.q();
        let marg = self.marginals();
        let pair = self.pair_table();
        let index: Vec<(usize, u8)> = free
            .iter()
            .flat_map(|&v| (0..q).filter(|&i| marg[v][i] > 0.0).map(move |i| (v, i as u8)).collect::<Vec<_>>())
            .collect();
        let k = index.len();
        let mut m = DMatrix::zeros(k, k);
        for (a, &(u, i)) in index.iter().enumerate() {
            for (b, &(v, j)) in index.iter().enumerate() {
                if u != v {
                    let joint = pair[u][v][i as usize * q + j as usize];
                    m[(a, b)] = joint / marg[u][i as usize] - marg[v][j as usize];
                }
            }
        }
        let eigenvalues = linalg::eigenvalues_general(&m)?;
        let max_imag = eigenvalues.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        let lambda_max = eigenvalues.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = index.iter().map(|&(v, i)| marg[v][i as usize]).collect();
        let symmetric_lambda_max = linalg::reversible_spectrum(&m, &weights)[0];
        Ok(InfluenceMatrix {
            index,
            eigenvalues: eigenvalues.iter().map(|c| (c.re, c.im)).collect(),
            matrix: m,
            lambda_max,
            symmetric_lambda_max,
            max_imag,
        })
    }

    /// Vertex-level influence: largest total variation change of the law at `v`
    /// between two conditionings of `u`.
    pub fn influence_matrix_tv(&self) -> Result<(Vec<usize>, DMatrix<f64>)> {
        let free = self.free_vertices();
        if free.len() < 2 {
            return Err(Error::TooFewFreeVertices);
        }
        let q = self.q();
        let marg = self.marginals();
        let pair = self.pair_table();
        let k = free.len();
        let mut m = DMatrix::zeros(k, k);
        for (a, &u) in free.iter().enumerate() {
            for (b, &v) in free.iter().enumerate() {
                if u == v {
                    continue;
                }
                let cond: Vec<Vec<f64>> = (0..q)
                    .filter(|&i| marg[u][i] > 0.0)
                    .map(|i| (0..q).map(|j| pair[u][v][i * q + j] / marg[u][i]).collect())
                    .collect();
                let mut best = 0.0f64;
                for x in &cond {
                    for y in &cond {
                        best = best.max(0.5 * x.iter().zip(y).map(|(s, t)| (s - t).abs()).sum::<f64>());
                    }
                }
                m[(a, b)] = best;
            }
        }
        Ok((free, m))
    }

    /// Signed influence `mu(v=1 | u=1) - mu(v=1 | u=0)` between free two-spin vertices
    /// whose both spins are feasible.
    pub fn signed_influence_matrix(&self) -> Result<(Vec<usize>, DMatrix<f64>)> {
        if self.q() != 2 {
            return Err(Error::InvalidModel("signed influence needs two spins".into()));
        }
        let marg = self.marginals();
        let pair = self.pair_table();
        let verts: Vec<usize> =
            self.free_vertices().into_iter().filter(|&v| marg[v][0] > 0.0 && marg[v][1] > 0.0).collect();
        let k = verts.len();
        let mut m = DMatrix::zeros(k, k);
        for (a, &u) in verts.iter().enumerate() {
            for (b, &v) in verts.iter().enumerate() {
                if u != v {
                    m[(a, b)] = pair[u][v][3] / marg[u][1] - pair[u][v][1] / marg[u][0];
                }
            }
        }
        Ok((verts, m))
    }

    /// Every conditional obtained by pinning a proper subset of the free vertices
    /// to a feasible boundary, including the empty pinning.
    pub fn pinned_conditionals(&self) -> Result<Vec<ExactDistribution>> {
        let free = self.free_vertices();
        if free.len() > 30 {
            return Err(Error::InstanceTooLarge(format!("{} free vertices", free.len())));
        }
        let full = (1u64 << free.len()) - 1;
        let mut out = Vec::new();
        for mask in 0..full {
            let mut keep = vec![false; self.n()];
            for (i, &v) in free.iter().enumerate() {
                keep[v] = mask >> i & 1 == 1;
            }
            for (key, idx) in self.group_by_restriction(&keep) {
                if out.len() >= MAX_PINNINGS {
                    return Err(Error::InstanceTooLarge(format!("more than {MAX_PINNINGS} pinnings")));
                }
                let mut pinning = self.pinning.clone();
                for v in 0..self.n() {
                    if keep[v] {
                        pinning.0[v] = Some(key[v]);
                    }
                }
                out.push(self.subset(&idx, pinning)?);
            }
        }
        Ok(out)
    }

    /// Maximum top eigenvalue of the influence matrix over all pinnings.
    pub fn spectral_independence(&self) -> Result<SpectralReport> {
        let conds = self.pinned_conditionals()?;
        let pinnings_checked = conds.len();
        let results = par_map(conds, |d| match d.influence_matrix() {
            Ok(im) => Some((im.lambda_max, im.symmetric_lambda_max, im.max_imag, d.pinning.clone())),
            Err(_) => None,
        });
        let mut rep = SpectralReport {
            eta: 0.0,
            eta_symmetric: 0.0,
            max_imag: 0.0,
            argmax: self.pinning.clone(),
            pinnings_checked,
        };
        for (lam, sym, imag, p) in results.into_iter().flatten() {
            rep.max_imag = rep.max_imag.max(imag);
            rep.eta_symmetric = rep.eta_symmetric.max(sym);
            if lam > rep.eta {
                rep.eta = lam;
                rep.argmax = p;
            }
        }
        if rep.max_imag > IMAG_TOLERANCE {
            return Err(Error::ComplexEigenvalue(rep.max_imag));
        }
        Ok(rep)
    }

    /// Smallest conditional probability of a feasible spin at a free vertex over all pinnings.
    pub fn marginal_bound(&self) -> Result<MarginalBound> {
        let conds = self.pinned_conditionals()?;
        let mut best = MarginalBound { b: f64::INFINITY, vertex: 0, spin: 0, pinning: self.pinning.clone() };
        for d in &conds {
            let marg = d.marginals();
            for v in d.free_vertices() {
                for (i, &p) in marg[v].iter().enumerate() {
                    if p > 0.0 && p < best.b {
                        best = MarginalBound { b: p, vertex: v, spin: i as u8, pinning: d.pinning.clone() };
                    }
                }
            }
        }
        Ok(best)
    }

    /// Whether the support is connected under single-site changes.
    pub fn hamming_connected(&self) -> bool {
        let free = self.free_vertices();
        let mut seen = vec![false; self.support.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            let mut s = self.support[i].clone();
            for &v in &free {
                let orig = s[v];
                for x in 0..self.q() as u8 {
                    if x == orig {
                        continue;
                    }
                    s[v] = x;
                    if let Some(&j) = self.index.get(&s) {
                        if !seen[j] {
                            seen[j] = true;
                            count += 1;
                            queue.push_back(j);
                        }
                    }
                }
                s[v] = orig;
            }
        }
        count == self.support.len()
    }

    /// Checks single-site connectivity of every conditional; returns the first
    /// disconnected pinning when one exists.
    pub fn totally_connected_check(&self) -> Result<(bool, Option<Pinning>)> {
        for d in self.pinned_conditionals()? {
            if !d.hamming_connected() {
                return Ok((false, Some(d.pinning.clone())));
            }
        }
        Ok((true, None))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n(),
            "q": self.q(),
            "model": self.system.label,
            "partition_function": self.z,
            "support": self.support.iter().map(|s| config_string(s)).collect::<Vec<_>>(),
            "probabilities": self.probs,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("configuration,weight,probability\n");
        for ((c, w), p) in self.support.iter().zip(&self.weights).zip(&self.probs) {
            s.push_str(&format!("{},{:e},{:e}\n", config_string(c), w, p));
        }
        s
    }
}

pub fn config_string(c: &[u8]) -> String {
    c.iter().map(|s| char::from_digit(*s as u32, 36).unwrap_or('?')).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InfluenceMatrix {
    pub index: Vec<(usize, u8)>,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<(f64, f64)>,
    pub lambda_max: f64,
    /// Top eigenvalue computed from the similar symmetric matrix.
    pub symmetric_lambda_max: f64,
    pub max_imag: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub eta: f64,
    pub eta_symmetric: f64,
    pub max_imag: f64,
    pub argmax: Pinning,
    pub pinnings_checked: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginalBound {
    pub b: f64,
    pub vertex: usize,
    pub spin: u8,
    pub pinning: Pinning,
}

fn check_inputs(p: &[f64], f: &[f64]) -> Result<()> {
    if p.len() != f.len() {
        return Err(Error::SupportMismatch);
    }
    if f.iter().any(|&x| x < 0.0) {
        return Err(Error::NegativeFunctionValue);
    }
    Ok(())
}

/// `Ent_p(f) = E[f log f] - E[f] log E[f]`, natural log, `0 log 0 = 0`.
pub fn entropy(p: &[f64], f: &[f64]) -> Result<f64> {
    check_inputs(p, f)?;
    let m = ksum(p.iter().zip(f).map(|(a, b)| a * b));
    if m <= 0.0 {
        return Ok(0.0);
    }
    Ok(m * ksum(p.iter().zip(f).map(|(&a, &b)| a * entropy_term(b / m))))
}

pub fn variance(p: &[f64], f: &[f64]) -> Result<f64> {
    if p.len() != f.len() {
        return Err(Error::SupportMismatch);
    }
    let m = ksum(p.iter().zip(f).map(|(a, b)| a * b));
    Ok(ksum(p.iter().zip(f).map(|(a, b)| a * (b - m) * (b - m))))
}

pub fn mean(p: &[f64], f: &[f64]) -> f64 {
    ksum(p.iter().zip(f).map(|(a, b)| a * b))
}

/// `KL(nu || mu)` for probability vectors on a common index set.
pub fn kl(nu: &[f64], mu: &[f64]) -> Result<f64> {
    if nu.len() != mu.len() {
        return Err(Error::SupportMismatch);
    }
    let mut terms = Vec::with_capacity(nu.len());
    for (&a, &b) in nu.iter().zip(mu) {
        if a < 0.0 || b < 0.0 {
            return Err(Error::NegativeFunctionValue);
        }
        if a > 0.0 {
            if b == 0.0 {
                return Err(Error::SupportMismatch);
            }
            terms.push(a * (a / b).ln());
        }
    }
    Ok(ksum(terms).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators;
    use crate::models::{colorings, hardcore, ising};

    fn hc(g: &Graph, l: f64) -> ExactDistribution {
        ExactDistribution::enumerate(g, &hardcore(l).unwrap()).unwrap()
    }

    #[test]
    fn hardcore_k2_support() {
        let d = hc(&generators::path(2), 1.0);
        assert_eq!(d.support(), &[vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert!(d.probs().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(d.partition_function(), 3.0);
    }

    #[test]
    fn errors() {
        let g = generators::path(2);
        let d = hc(&g, 1.0);
        assert_eq!(d.condition(&[(0, 1), (1, 1)]).unwrap_err(), Error::InfeasiblePinning);
        let big = generators::path(25);
        assert!(matches!(ExactDistribution::enumerate(&big, &hardcore(1.0).unwrap()), Err(Error::InstanceTooLarge(_))));
        let tri = generators::complete(3);
        assert_eq!(ExactDistribution::enumerate(&tri, &colorings(2).unwrap()).unwrap_err(), Error::EmptySupport);
        assert_eq!(d.entropy(&[1.0, -1.0, 0.0]), Err(Error::NegativeFunctionValue));
        assert_eq!(kl(&[0.5, 0.5], &[1.0, 0.0]), Err(Error::SupportMismatch));
        assert_eq!(d.condition(&[(0, 0)]).unwrap().influence_matrix().unwrap_err(), Error::TooFewFreeVertices);
    }

    #[test]
    fn influence_k2() {
        let d = hc(&generators::path(2), 1.0);
        let im = d.influence_matrix().unwrap();
        assert!((im.lambda_max - 0.5).abs() < 1e-12);
        assert!((im.symmetric_lambda_max - 0.5).abs() < 1e-12);
        assert!(im.max_imag < 1e-12);
        let (_, s) = d.signed_influence_matrix().unwrap();
        assert!((s[(0, 1)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn marginal_bound_and_connectivity() {
        let d = hc(&generators::path(2), 1.0);
        assert!((d.marginal_bound().unwrap().b - 1.0 / 3.0).abs() < 1e-15);
        assert!(d.totally_connected_check().unwrap().0);
        let c = ExactDistribution::enumerate(&generators::path(2), &colorings(2).unwrap()).unwrap();
        assert!(!c.totally_connected_check().unwrap().0);
    }

    #[test]
    fn entropy_values() {
        let p = [0.5, 0.5];
        assert!((entropy(&p, &[0.0, 2.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&p, &[3.0, 3.0]).unwrap(), 0.0);
        assert!((variance(&p, &[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((kl(&[1.0, 0.0], &p).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn block_entropy_decomposition() {
        let d = ExactDistribution::enumerate(&generators::path(3), &ising(0.5, 1.3).unwrap()).unwrap();
        let f: Vec<f64> = (0..d.support().len()).map(|i| 1.0 + (i as f64 * 0.7).sin().abs()).collect();
        let all = vec![true; 3];
        assert!((d.block_entropy(&f, &all).unwrap() - d.entropy(&f).unwrap()).abs() < 1e-14);
        assert_eq!(d.block_entropy(&f, &[false; 3]).unwrap(), 0.0);
    }

    #[test]
    fn pinned_conditional_count() {
        let d = ExactDistribution::enumerate(&generators::path(3), &ising(0.5, 1.0).unwrap()).unwrap();
        assert_eq!(d.pinned_conditionals().unwrap().len(), 3usize.pow(3) - 8);
    }
}
