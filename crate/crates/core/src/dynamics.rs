//! Glauber and block dynamics: exact transition matrices, a seeded sampler,
//! exact mixing times, and numerical estimates of the functional-inequality
//! constants of a reversible chain.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{entropy, Config, ExactDistribution};
use crate::graph::{for_each_subset_of_size, Graph};
use crate::linalg;
use crate::models::SpinSystem;
use crate::optimize::{self, SearchParams};
use crate::util::ksum;

/// Largest state space accepted by [`exact_mixing_time`].
pub const MAX_MIXING_STATES: usize = 4096;
/// Largest number of steps tried by [`exact_mixing_time`].
pub const MAX_MIXING_STEPS: usize = 200_000;

/// A reversible chain on the support of a distribution.
#[derive(Debug, Clone)]
pub struct ChainMatrix {
    pub states: Vec<Config>,
    pub matrix: DMatrix<f64>,
    pub stationary: Vec<f64>,
}

impl ChainMatrix {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Spectrum in descending order.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::reversible_spectrum(&self.matrix, &self.stationary)
    }

    /// `1 - lambda_2`.
    pub fn spectral_gap(&self) -> f64 {
        1.0 - self.spectrum().get(1).copied().unwrap_or(0.0)
    }

    /// `E(f, g) = 1/2 sum mu(x) P(x,y) (f(x)-f(y)) (g(x)-g(y))`.
    pub fn dirichlet(&self, f: &[f64], g: &[f64]) -> f64 {
        let n = self.len();
        let mut terms = Vec::new();
        for x in 0..n {
            for y in 0..n {
                let p = self.matrix[(x, y)];
                if p != 0.0 && x != y {
                    terms.push(0.5 * self.stationary[x] * p * (f[x] - f[y]) * (g[x] - g[y]));
                }
            }
        }
        ksum(terms)
    }

    /// Largest deviation from detailed balance.
    pub fn reversibility_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                let a = self.stationary[x] * self.matrix[(x, y)];
                let b = self.stationary[y] * self.matrix[(y, x)];
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    fn is_irreducible(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if !seen[y] && self.matrix[(x, y)] > 0.0 {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }

    /// Second eigenvector as a function on states, normalized in `L^2(mu)`.
    fn second_eigenfunction(&self) -> Vec<f64> {
        let s = linalg::symmetrize(&self.matrix, &self.stationary);
        let s = (&s + s.transpose()) * 0.5;
        let eig = s.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let col = eig.eigenvectors.column(order[1.min(order.len() - 1)]);
        col.iter().zip(&self.stationary).map(|(v, p)| v / p.sqrt()).collect()
    }
}

/// Heat-bath Glauber dynamics on the free vertices.
pub fn glauber_matrix(d: &ExactDistribution) -> Result<ChainMatrix> {
    let free = d.free_vertices();
    if free.is_empty() {
        return Err(Error::ParameterOutOfRange("no free vertices".into()));
    }
    let states = d.support().to_vec();
    let probs = d.probs();
    let n_states = states.len();
    let mut m = DMatrix::zeros(n_states, n_states);
    let nf = free.len() as f64;
    for (x, s) in states.iter().enumerate() {
        let mut t = s.clone();
        for &v in &free {
            let orig = t[v];
            let mut nbrs = Vec::new();
            for i in 0..d.q() as u8 {
                t[v] = i;
                if let Some(y) = d.index_of(&t) {
                    nbrs.push(y);
                }
            }
            t[v] = orig;
            let z: f64 = nbrs.iter().map(|&y| probs[y]).sum();
            for y in nbrs {
                m[(x, y)] += probs[y] / (z * nf);
            }
        }
    }
    Ok(ChainMatrix { states, matrix: m, stationary: probs.to_vec() })
}

/// Heat-bath block dynamics on a uniformly random set of `ell` free vertices.
pub fn block_matrix(d: &ExactDistribution, ell: usize) -> Result<ChainMatrix> {
    let free = d.free_vertices();
    if ell == 0 || ell > free.len() {
        return Err(Error::ParameterOutOfRange(format!("ell = {ell} with {} free vertices", free.len())));
    }
    if free.len() > 63 {
        return Err(Error::InstanceTooLarge(format!("{} free vertices", free.len())));
    }
    let states = d.support().to_vec();
    let probs = d.probs();
    let n_states = states.len();
    let mut m = DMatrix::zeros(n_states, n_states);
    let mut subsets = Vec::new();
    for_each_subset_of_size(free.len(), ell, |s| subsets.push(s));
    let weight = 1.0 / subsets.len() as f64;
    for mask in subsets {
        let mut keep = vec![true; d.n()];
        for (i, &v) in free.iter().enumerate() {
            if mask >> i & 1 == 1 {
                keep[v] = false;
            }
        }
        for (_, idx) in d.group_by_restriction(&keep) {
            let z: f64 = idx.iter().map(|&y| probs[y]).sum();
            for &x in &idx {
                for &y in &idx {
                    m[(x, y)] += weight * probs[y] / z;
                }
            }
        }
    }
    Ok(ChainMatrix { states, matrix: m, stationary: probs.to_vec() })
}

/// Single-site heat-bath sampler with a seeded ChaCha stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    graph: Graph,
    system: SpinSystem,
    free: Vec<usize>,
    state: Config,
    rng: ChaCha8Rng,
}

impl Sampler {
    /// `free` lists the vertices that are updated; other spins stay fixed.
    pub fn new(g: &Graph, sys: &SpinSystem, init: Config, free: Vec<usize>, seed: u64) -> Result<Self> {
        if init.len() != g.n() || init.iter().any(|&s| s as usize >= sys.q) || sys.weight(g, &init) <= 0.0 {
            return Err(Error::InfeasibleState);
        }
        if free.is_empty() {
            return Err(Error::ParameterOutOfRange("no free vertices".into()));
        }
        Ok(Sampler { graph: g.clone(), system: sys.clone(), free, state: init, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn state(&self) -> &Config {
        &self.state
    }

    pub fn step(&mut self) {
        let v = self.free[self.rng.random_range(0..self.free.len())];
        let p = self.system.local_conditional(&self.graph, &self.state, v).expect("current state is feasible");
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut pick = p.len() - 1;
        for (i, &x) in p.iter().enumerate() {
            acc += x;
            if u < acc {
                pick = i;
                break;
            }
        }
        self.state[v] = pick as u8;
    }

    pub fn run(&mut self, steps: usize) -> &Config {
        for _ in 0..steps {
            self.step();
        }
        &self.state
    }
}

/// One heat-bath update of a uniformly random vertex.
pub fn glauber_step(g: &Graph, sys: &SpinSystem, state: &mut Config, rng: &mut ChaCha8Rng) -> Result<()> {
    if sys.weight(g, state) <= 0.0 {
        return Err(Error::InfeasibleState);
    }
    let v = rng.random_range(0..g.n());
    let p = sys.local_conditional(g, state, v).ok_or(Error::InfeasibleState)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    state[v] = (p.len() - 1) as u8;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            state[v] = i as u8;
            break;
        }
    }
    Ok(())
}

/// Trajectory of `steps` updates from `init`, including the initial state.
pub fn run_chain(g: &Graph, sys: &SpinSystem, init: Config, steps: usize, seed: u64) -> Result<Vec<Config>> {
    let mut s = Sampler::new(g, sys, init, (0..g.n()).collect(), seed)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s.state().clone());
    for _ in 0..steps {
        s.step();
        out.push(s.state().clone());
    }
    Ok(out)
}

pub fn trajectory_csv(traj: &[Config]) -> String {
    let mut s = String::from("t,state\n");
    for (t, c) in traj.iter().enumerate() {
        s.push_str(&format!("{t},{}\n", crate::exact::config_string(c)));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    pub states: usize,
    pub epsilon: f64,
    /// Worst-case total variation distance after `t` steps, `t = 0, 1, ...`.
    pub distance: Vec<f64>,
    pub t_mix: usize,
    pub spectral_gap: f64,
    pub min_stationary: f64,
}

/// Exact `T_mix(eps)` by iterating the full transition matrix.
pub fn exact_mixing_time(chain: &ChainMatrix, eps: f64) -> Result<MixingReport> {
    let n = chain.len();
    if n > MAX_MIXING_STATES {
        return Err(Error::InstanceTooLarge(format!("{n} states (limit {MAX_MIXING_STATES})")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::ParameterOutOfRange(format!("eps = {eps}")));
    }
    if !chain.is_irreducible() {
        return Err(Error::NotErgodic);
    }
    let sparse: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| (0..n).filter(|&y| chain.matrix[(x, y)] != 0.0).map(|y| (y, chain.matrix[(x, y)])).collect())
        .collect();
    let pi = &chain.stationary;
    let worst = |m: &DMatrix<f64>| {
        (0..n)
            .map(|x| 0.5 * (0..n).map(|y| (m[(x, y)] - pi[y]).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut distance = vec![worst(&m)];
    while *distance.last().unwrap() > eps {
        if distance.len() > MAX_MIXING_STEPS {
            return Err(Error::InstanceTooLarge(format!("no mixing within {MAX_MIXING_STEPS} steps")));
        }
        let mut next = DMatrix::zeros(n, n);
        for x in 0..n {
            for k in 0..n {
                let a = m[(x, k)];
                if a == 0.0 {
                    continue;
                }
                for &(y, p) in &sparse[k] {
                    next[(x, y)] += a * p;
                }
            }
        }
        m = next;
        distance.push(worst(&m));
    }
    Ok(MixingReport {
        states: n,
        epsilon: eps,
        t_mix: distance.len() - 1,
        distance,
        spectral_gap: chain.spectral_gap(),
        min_stationary: pi.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

fn check_nontrivial(chain: &ChainMatrix) -> Result<()> {
    if chain.len() < 2 {
        Err(Error::DegenerateKL)
    } else {
        Ok(())
    }
}

fn near_constant_starts(chain: &ChainMatrix) -> Vec<Vec<f64>> {
    let phi = chain.second_eigenfunction();
    let scale = phi.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    [1e-2, 1e-1, 0.5]
        .iter()
        .flat_map(|&e| {
            let a: Vec<f64> = phi.iter().map(|x| 1.0 + e * x / scale).collect();
            let b: Vec<f64> = phi.iter().map(|x| 1.0 - e * x / scale).collect();
            [a, b]
        })
        .collect()
}

/// Upper estimate of the relative entropy decay rate
/// `inf_nu 1 - KL(nu P || mu) / KL(nu || mu)`.
pub fn entropy_decay_rate(chain: &ChainMatrix, params: SearchParams) -> Result<f64> {
    check_nontrivial(chain)?;
    let p = &chain.matrix;
    let pi = &chain.stationary;
    let best = optimize::maximize(chain.len(), params, &near_constant_starts(chain), |f| {
        let (e, ge) = optimize::entropy_with_grad(pi, f);
        if e < 1e-14 {
            return None;
        }
        let pf: Vec<f64> = (p * DVector::from_column_slice(f)).iter().copied().collect();
        let (ep, gp) = optimize::entropy_with_grad(pi, &pf);
        let g: Vec<f64> = (p.transpose() * DVector::from_vec(gp)).iter().copied().collect();
        Some((ep / e, optimize::ratio_grad(ep, &g, e, &ge)))
    })
    .ok_or(Error::DegenerateKL)?;
    Ok(1.0 - best.value)
}

/// Contraction of `KL(nu || mu)` after one step for a specific density `f = nu / mu`.
pub fn kl_contraction(chain: &ChainMatrix, f: &[f64]) -> Result<f64> {
    let e = entropy(&chain.stationary, f)?;
    if e <= 0.0 {
        return Err(Error::DegenerateKL);
    }
    let pf: Vec<f64> = (&chain.matrix * DVector::from_column_slice(f)).iter().copied().collect();
    Ok(entropy(&chain.stationary, &pf)? / e)
}

fn dirichlet_grad(chain: &ChainMatrix, f: &[f64], h: &[f64], dh: impl Fn(usize, usize) -> f64) -> (f64, Vec<f64>) {
    let n = chain.len();
    let value = chain.dirichlet(f, h);
    let grad = (0..n)
        .map(|z| {
            ksum((0..n).filter(|&y| y != z && chain.matrix[(z, y)] != 0.0).map(|y| {
                chain.stationary[z] * chain.matrix[(z, y)] * dh(z, y)
            }))
        })
        .collect();
    (value, grad)
}

/// Upper estimate of the modified log-Sobolev constant `inf E(f, log f) / Ent(f)`.
pub fn mlsi_estimate(chain: &ChainMatrix, params: SearchParams) -> Result<f64> {
    check_nontrivial(chain)?;
    let pi = &chain.stationary;
    let best = optimize::maximize(chain.len(), params, &near_constant_starts(chain), |f| {
        let (e, ge) = optimize::entropy_with_grad(pi, f);
        if e < 1e-14 {
            return None;
        }
        let lf: Vec<f64> = f.iter().map(|x| x.ln()).collect();
        let (d, gd) = dirichlet_grad(chain, f, &lf, |z, y| (lf[z] - lf[y]) + (f[z] - f[y]) / f[z]);
        let g = optimize::ratio_grad(d, &gd, e, &ge);
        Some((-d / e, g.iter().map(|x| -x).collect()))
    })
    .ok_or(Error::DegenerateKL)?;
    Ok(-best.value)
}

/// Upper estimate of the standard log-Sobolev constant `inf E(sqrt f, sqrt f) / Ent(f)`.
pub fn log_sobolev_estimate(chain: &ChainMatrix, params: SearchParams) -> Result<f64> {
    check_nontrivial(chain)?;
    let pi = &chain.stationary;
    let best = optimize::maximize(chain.len(), params, &near_constant_starts(chain), |f| {
        let (e, ge) = optimize::entropy_with_grad(pi, f);
        if e < 1e-14 {
            return None;
        }
        let r: Vec<f64> = f.iter().map(|x| x.sqrt()).collect();
        let (d, gd) = dirichlet_grad(chain, &r, &r, |z, y| (r[z] - r[y]) / r[z]);
        let g = optimize::ratio_grad(d, &gd, e, &ge);
        Some((-d / e, g.iter().map(|x| -x).collect()))
    })
    .ok_or(Error::DegenerateKL)?;
    Ok(-best.value)
}

/// `ceil((1/kappa) (log log (1/pi_min) + log (1/(2 eps^2))))`.
pub fn mixing_bound_from_certificate(kappa: f64, pi_min: f64, eps: f64) -> u64 {
    let x = ((1.0 / pi_min).ln().ln() + (1.0 / (2.0 * eps * eps)).ln()) / kappa;
    x.ceil().max(0.0) as u64
}

/// Mixing bound from an approximate tensorization constant `c1` on `n` sites.
pub fn mixing_bound_from_tensorization(c1: f64, n: usize, pi_min: f64, eps: f64) -> u64 {
    mixing_bound_from_certificate(1.0 / (c1 * n as f64), pi_min, eps)
}

/// `ceil(c1 n (log n + log log (1/b) + log (1/(2 eps^2))))`, the tensorization
/// bound with `pi_min >= b^n`.
pub fn mixing_bound_from_marginals(c1: f64, n: usize, b: f64, eps: f64) -> u64 {
    let x = c1 * n as f64 * ((n as f64).ln() + (1.0 / b).ln().ln() + (1.0 / (2.0 * eps * eps)).ln());
    x.ceil().max(0.0) as u64
}

/// Lower bound on the standard log-Sobolev constant from a tensorization
/// constant and a marginal bound `b < 1/2`.
pub fn log_sobolev_from_tensorization(c1: f64, n: usize, b: f64) -> f64 {
    let base = 1.0 / (c1 * n as f64);
    if (b - 0.5).abs() < 1e-15 {
        base / 2.0
    } else {
        (1.0 - 2.0 * b) / (1.0 / b - 1.0).ln() * base
    }
}

/// `lambda / (2 + log(1/pi_min))`, a lower bound on the log-Sobolev constant.
pub fn log_sobolev_from_gap(gap: f64, pi_min: f64) -> f64 {
    gap / (2.0 + (1.0 / pi_min).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators;
    use crate::models::{hardcore, ising};

    fn k2() -> ExactDistribution {
        ExactDistribution::enumerate(&generators::path(2), &hardcore(1.0).unwrap()).unwrap()
    }

    #[test]
    fn glauber_k2_matrix_and_gap() {
        let c = glauber_matrix(&k2()).unwrap();
        let want = [[0.5, 0.25, 0.25], [0.25, 0.75, 0.0], [0.25, 0.0, 0.75]];
        for x in 0..3 {
            for y in 0..3 {
                assert!((c.matrix[(x, y)] - want[x][y]).abs() < 1e-15);
            }
        }
        let sp = c.spectrum();
        assert!((sp[0] - 1.0).abs() < 1e-12 && (sp[1] - 0.75).abs() < 1e-12 && (sp[2] - 0.25).abs() < 1e-12);
        assert!((c.spectral_gap() - 0.25).abs() < 1e-12);
        assert!(c.reversibility_defect() < 1e-15);
    }

    #[test]
    fn block_one_is_glauber() {
        let d = ExactDistribution::enumerate(&generators::path(3), &ising(0.5, 1.2).unwrap()).unwrap();
        let a = glauber_matrix(&d).unwrap();
        let b = block_matrix(&d, 1).unwrap();
        assert!((a.matrix - b.matrix).abs().max() < 1e-15);
        let full = block_matrix(&d, 3).unwrap();
        assert!((full.spectral_gap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixing_bound_example() {
        assert_eq!(mixing_bound_from_certificate(1.0, (-1.0f64).exp(), 0.25), 3);
    }

    #[test]
    fn sampler_rejects_infeasible() {
        let g = generators::path(2);
        assert_eq!(run_chain(&g, &hardcore(1.0).unwrap(), vec![1, 1], 3, 0).unwrap_err(), Error::InfeasibleState);
        let t1 = run_chain(&g, &hardcore(1.0).unwrap(), vec![0, 0], 20, 9).unwrap();
        let t2 = run_chain(&g, &hardcore(1.0).unwrap(), vec![0, 0], 20, 9).unwrap();
        assert_eq!(t1, t2);
        assert!(t1.iter().all(|s| s != &vec![1, 1]));
    }

    #[test]
    fn not_ergodic_rejected() {
        let d = ExactDistribution::enumerate(&generators::path(2), &crate::models::colorings(2).unwrap()).unwrap();
        let c = glauber_matrix(&d).unwrap();
        assert_eq!(exact_mixing_time(&c, 0.25).unwrap_err(), Error::NotErgodic);
    }

    #[test]
    fn k2_mixing_and_functional_constants() {
        let c = glauber_matrix(&k2()).unwrap();
        let rep = exact_mixing_time(&c, 0.25).unwrap();
        assert!(rep.distance.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(rep.t_mix >= 1);
        let params = SearchParams { restarts: 6, iterations: 300, seed: 3 };
        let alpha = entropy_decay_rate(&c, params).unwrap();
        let rho0 = mlsi_estimate(&c, params).unwrap();
        let rho = log_sobolev_estimate(&c, params).unwrap();
        let gap = c.spectral_gap();
        assert!(alpha > 0.0 && alpha <= 1.0);
        assert!(rho <= gap / 2.0 + 1e-4);
        assert!(rho0 <= 2.0 * gap + 1e-4);
        assert!(rho >= log_sobolev_from_gap(gap, 1.0 / 3.0) - 1e-9);
    }
}
