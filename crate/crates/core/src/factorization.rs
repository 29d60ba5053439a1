//! Approximate tensorization and uniform block factorization constants:
//! adversarial lower estimates, exact variance constants, and the chain of
//! inequalities that turns block factorization into single-site tensorization.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{block_matrix, glauber_matrix};
use crate::error::{Error, Result};
use crate::exact::{ExactDistribution, Pinning};
use crate::graph::{component_size_probability, components_mask, for_each_subset_of_size};
use crate::optimize::{self, SearchParams};
use crate::simplicial::build_levels;
use crate::util::{entropy_term, ksum};

/// Largest state space for which the conductance is computed by subset enumeration.
pub const MAX_CONDUCTANCE_STATES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Entropy,
    Variance,
}

/// The partition of the support induced by each `ell`-subset of free vertices.
#[derive(Debug, Clone)]
pub struct BlockFamily {
    pub ell: usize,
    /// Per block: the free-vertex mask and the groups of support indices sharing a boundary.
    pub blocks: Vec<(u64, Vec<Vec<usize>>)>,
}

impl BlockFamily {
    pub fn new(d: &ExactDistribution, ell: usize) -> Result<Self> {
        let free = d.free_vertices();
        if ell == 0 || ell > free.len() {
            return Err(Error::ParameterOutOfRange(format!("ell = {ell} with {} free vertices", free.len())));
        }
        if free.len() > 63 {
            return Err(Error::InstanceTooLarge(format!("{} free vertices", free.len())));
        }
        let mut masks = Vec::new();
        for_each_subset_of_size(free.len(), ell, |s| masks.push(s));
        let blocks = masks
            .into_iter()
            .map(|mask| {
                let mut keep = vec![true; d.n()];
                for (i, &v) in free.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        keep[v] = false;
                    }
                }
                (mask, d.group_by_restriction(&keep).into_iter().map(|(_, idx)| idx).collect())
            })
            .collect();
        Ok(BlockFamily { ell, blocks })
    }

    /// `(1/#blocks) sum_S mu[Ent_S f]` with its gradient in `f`.
    pub fn avg_entropy_with_grad(&self, pi: &[f64], f: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; f.len()];
        let mut terms = Vec::new();
        let w = 1.0 / self.blocks.len() as f64;
        for (_, groups) in &self.blocks {
            for idx in groups {
                let mass = ksum(idx.iter().map(|&i| pi[i]));
                let m = ksum(idx.iter().map(|&i| pi[i] * f[i])) / mass;
                for &i in idx {
                    let l = if f[i] > 0.0 { (f[i] / m).ln() } else { 0.0 };
                    terms.push(w * pi[i] * m * entropy_term(f[i] / m));
                    grad[i] += w * pi[i] * l;
                }
            }
        }
        (ksum(terms).max(0.0), grad)
    }

    /// Quadratic form of `(1/#blocks) sum_S mu[Var_S f]`.
    pub fn avg_variance_form(&self, pi: &[f64]) -> DMatrix<f64> {
        let n = pi.len();
        let mut b = DMatrix::zeros(n, n);
        let w = 1.0 / self.blocks.len() as f64;
        for (_, groups) in &self.blocks {
            for idx in groups {
                let mass = ksum(idx.iter().map(|&i| pi[i]));
                for &i in idx {
                    b[(i, i)] += w * pi[i];
                    for &j in idx {
                        b[(i, j)] -= w * pi[i] * pi[j] / mass;
                    }
                }
            }
        }
        b
    }
}

fn variance_form(pi: &[f64]) -> DMatrix<f64> {
    let n = pi.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { pi[i] - pi[i] * pi[j] } else { -pi[i] * pi[j] })
}

/// Maximizes `x'Ax / x'Bx` for positive semidefinite forms by locally optimal
/// Rayleigh-Ritz steps from several random starts.
pub fn max_rayleigh(a: &DMatrix<f64>, b: &DMatrix<f64>, params: SearchParams) -> Option<(f64, Vec<f64>)> {
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let scale = b.abs().max().max(1e-300);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..params.restarts.max(1) {
        let mut x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut p: Option<DVector<f64>> = None;
        let mut rho = f64::NEG_INFINITY;
        for _ in 0..params.iterations.max(1) * 4 {
            let bx = b * &x;
            let den = x.dot(&bx);
            if den <= 1e-300 {
                break;
            }
            let r = a * &x - (x.dot(&(a * &x)) / den) * bx;
            let mut basis: Vec<DVector<f64>> = Vec::new();
            for v in [Some(x.clone()), Some(r), p.clone()].into_iter().flatten() {
                let mut v = v;
                for _ in 0..2 {
                    for u in &basis {
                        let c = u.dot(&(b * &v));
                        v -= c * u;
                    }
                }
                let nb = v.dot(&(b * &v));
                if nb > 1e-24 * scale * v.dot(&v) {
                    basis.push(v / nb.sqrt());
                }
            }
            if basis.is_empty() {
                break;
            }
            let k = basis.len();
            let ah = DMatrix::from_fn(k, k, |i, j| basis[i].dot(&(a * &basis[j])));
            let ah = (&ah + ah.transpose()) * 0.5;
            let eig = ah.symmetric_eigen();
            let (top, &val) =
                eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            let y = eig.eigenvectors.column(top);
            let xn: DVector<f64> = (0..k).fold(DVector::zeros(n), |acc, i| acc + y[i] * &basis[i]);
            p = Some((1..k).fold(DVector::zeros(n), |acc, i| acc + y[i] * &basis[i]));
            x = xn;
            let done = (val - rho).abs() <= 1e-14 * val.abs().max(1e-300);
            rho = val;
            if done {
                break;
            }
        }
        if rho.is_finite() && best.as_ref().map_or(true, |b| rho > b.0) {
            best = Some((rho, x.iter().copied().collect()));
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainStep {
    pub name: String,
    pub value: f64,
}

/// A named inequality `lhs <= rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Check {
    pub fn le(name: &str, lhs: f64, rhs: f64, tol: f64) -> Check {
        Check { name: name.into(), lhs, rhs, holds: lhs <= rhs + tol * rhs.abs().max(1.0) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub kind: Kind,
    pub ell: usize,
    #[serde(rename = "C_measured")]
    pub c_measured: f64,
    #[serde(rename = "C_certified")]
    pub c_certified: Option<f64>,
    pub witness_f: Vec<f64>,
    pub chain: Vec<Check>,
}

/// `(ell/n) Ent(f) / avg_S mu[Ent_S f]` (or the variance analog) for one function.
pub fn factorization_ratio(d: &ExactDistribution, fam: &BlockFamily, kind: Kind, f: &[f64]) -> Result<f64> {
    let n = d.free_vertices().len() as f64;
    let pi = d.probs();
    let (num, den) = match kind {
        Kind::Entropy => (d.entropy(f)?, fam.avg_entropy_with_grad(pi, f).0),
        Kind::Variance => {
            let x = DVector::from_column_slice(f);
            let b = fam.avg_variance_form(pi);
            (d.variance(f)?, x.dot(&(b * &x)))
        }
    };
    if den <= 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(fam.ell as f64 / n * num / den)
}

/// Adversarial lower estimate of the `ell`-uniform block factorization constant.
pub fn block_factorization_ratio(
    d: &ExactDistribution,
    ell: usize,
    kind: Kind,
    params: SearchParams,
) -> Result<FactorizationReport> {
    let fam = BlockFamily::new(d, ell)?;
    let n = d.free_vertices().len();
    let scale = ell as f64 / n as f64;
    let pi = d.probs();
    if d.support().len() < 2 {
        return Err(Error::DegenerateDenominator);
    }
    match kind {
        Kind::Entropy => {
            let best = optimize::maximize(pi.len(), params, &[], |f| {
                let (e, ge) = optimize::entropy_with_grad(pi, f);
                let (den, gd) = fam.avg_entropy_with_grad(pi, f);
                if e < 1e-14 || den <= 1e-300 {
                    return None;
                }
                Some((e / den, optimize::ratio_grad(e, &ge, den, &gd)))
            })
            .ok_or(Error::DegenerateDenominator)?;
            let c_certified = build_levels(d)
                .and_then(|c| c.exact_certificate(n))
                .ok()
                .and_then(|cert| cert.c_block(ell));
            let c_measured = scale * best.value;
            let chain = c_certified
                .map(|c| vec![Check::le("measured <= (ell/n)/kappa(n-ell,n)", c_measured, c, 1e-9)])
                .unwrap_or_default();
            Ok(FactorizationReport { kind, ell, c_measured, c_certified, witness_f: best.witness, chain })
        }
        Kind::Variance => {
            let a = variance_form(pi);
            let b = fam.avg_variance_form(pi);
            let (val, x) = max_rayleigh(&a, &b, params).ok_or(Error::DegenerateDenominator)?;
            let gap = block_matrix(d, ell)?.spectral_gap();
            let c_measured = scale * val;
            let exact = scale / gap;
            let mut chain = vec![Check::le("measured <= (ell/n)/gap(block)", c_measured, exact, 1e-9)];
            if ell == n {
                chain.push(Check::le("C(n) <= 1", c_measured, 1.0, 1e-9));
            }
            if let Ok(vc) = build_levels(d).and_then(|c| c.variance_certificate(n, n - ell)) {
                if vc.gap_bound > 0.0 {
                    chain.push(Check::le("(ell/n)/gap(block) <= (ell/n)/certified gap", exact, scale / vc.gap_bound, 1e-9));
                }
            }
            Ok(FactorizationReport { kind, ell, c_measured, c_certified: Some(exact), witness_f: x, chain })
        }
    }
}

/// Approximate tensorization, i.e. block factorization with `ell = 1`.
pub fn tensorization_ratio(d: &ExactDistribution, kind: Kind, params: SearchParams) -> Result<FactorizationReport> {
    block_factorization_ratio(d, 1, kind, params)
}

/// `3 k^2 log(1/b) / (2 b^(2k+2))`.
pub fn crude_constant(k: usize, b: f64) -> f64 {
    3.0 * (k * k) as f64 * (1.0 / b).ln() / (2.0 * b.powi(2 * k as i32 + 2))
}

#[derive(Debug, Clone, Serialize)]
pub struct CrudeReport {
    pub k: usize,
    pub states: usize,
    pub c1_measured: f64,
    pub gap: f64,
    pub min_prob: f64,
    /// `1 / (rho_lower k)` with `rho_lower` from the spectral gap and the smallest probability.
    pub c1_from_gap: f64,
    /// Exact conductance of the Glauber dynamics when the state space is small.
    pub conductance: Option<f64>,
    pub formula: f64,
}

/// Crude tensorization bound for the conditional on block `block` given the
/// rest of the configuration `xi`.
pub fn crude_bound(d: &ExactDistribution, block: &[usize], xi: &Pinning, b: f64, params: SearchParams) -> Result<CrudeReport> {
    let mut pin = xi.clone();
    for &v in block {
        pin.0[v] = None;
    }
    let cond = d.condition_on(&pin)?;
    let k = cond.free_vertices().len();
    let states = cond.support().len();
    let formula = crude_constant(k, b);
    if states <= 2 {
        let c1 = if states == 2 { tensorization_ratio(&cond, Kind::Entropy, params)?.c_measured } else { 0.0 };
        return Ok(CrudeReport {
            k,
            states,
            c1_measured: c1,
            gap: 1.0,
            min_prob: cond.min_prob(),
            c1_from_gap: 1.0,
            conductance: None,
            formula,
        });
    }
    let c1 = tensorization_ratio(&cond, Kind::Entropy, params)?.c_measured;
    let chain = glauber_matrix(&cond)?;
    let gap = chain.spectral_gap();
    let mu = cond.min_prob();
    let factor = if (mu - 0.5).abs() < 1e-15 { 0.5 } else { (1.0 - 2.0 * mu) / (1.0 / mu - 1.0).ln() };
    let conductance = if states <= MAX_CONDUCTANCE_STATES { Some(conductance(&chain.matrix, &chain.stationary)) } else { None };
    Ok(CrudeReport {
        k,
        states,
        c1_measured: c1,
        gap,
        min_prob: mu,
        c1_from_gap: 1.0 / (factor * gap * k as f64),
        conductance,
        formula,
    })
}

/// `min over sets A with pi(A) <= 1/2` of the ergodic flow out of `A` divided by `pi(A)`.
pub fn conductance(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = pi.len();
    let mut best = f64::INFINITY;
    for mask in 1u64..(1u64 << n) - 1 {
        let mass: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| pi[i]).sum();
        if mass > 0.5 + 1e-15 {
            continue;
        }
        let mut flow = 0.0;
        for i in (0..n).filter(|&i| mask >> i & 1 == 1) {
            for j in (0..n).filter(|&j| mask >> j & 1 == 0) {
                flow += pi[i] * p[(i, j)];
            }
        }
        best = best.min(flow / mass);
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub b: f64,
    pub max_degree: usize,
    pub theta: f64,
    pub ell: usize,
    pub c_block_certified: f64,
    pub c_block_measured: f64,
    pub c1_bound: f64,
    pub c1_measured: f64,
    /// Inequality chain evaluated on the adversarial witness and on random functions;
    /// each entry lists the successive right-hand sides.
    pub chains: Vec<Vec<ChainStep>>,
    pub chains_hold: bool,
    /// Spectral independence of the instance over all pinnings.
    pub eta: f64,
    /// Closed-form single-site constant; `None` below `closed_form_min_n`.
    pub closed_form: Option<f64>,
    pub closed_form_min_n: f64,
    pub checks: Vec<Check>,
}

impl PipelineReport {
    pub fn passed(&self) -> bool {
        self.chains_hold && self.checks.iter().all(|c| c.holds)
    }
}

/// Right-hand sides of the block-to-single-site argument for one function `f`.
pub fn comparison_chain(
    d: &ExactDistribution,
    fam: &BlockFamily,
    c_block: f64,
    b: f64,
    max_degree: usize,
    theta: f64,
    f: &[f64],
) -> Result<Vec<ChainStep>> {
    let free = d.free_vertices();
    let n = free.len();
    let ell = fam.ell;
    let pre = c_block * n as f64 / ell as f64;
    let pi = d.probs();
    let adj_full = d.graph().adjacency_masks()?;
    // adjacency restricted to free-vertex positions
    let adj: Vec<u64> = free
        .iter()
        .map(|&v| free.iter().enumerate().filter(|(_, &w)| adj_full[v] >> w & 1 == 1).fold(0u64, |a, (i, _)| a | 1 << i))
        .collect();
    let single: Vec<f64> = free
        .iter()
        .map(|&v| {
            let mut blk = vec![false; d.n()];
            blk[v] = true;
            d.block_entropy(f, &blk)
        })
        .collect::<Result<_>>()?;
    let ent = d.entropy(f)?;
    let avg_block = fam.avg_entropy_with_grad(pi, f).0;
    let mut comp_sum = Vec::new();
    let mut crude_sum = Vec::new();
    for (mask, _) in &fam.blocks {
        for comp in components_mask(&adj, *mask) {
            let mut blk = vec![false; d.n()];
            let mut local = Vec::new();
            for i in 0..n {
                if comp >> i & 1 == 1 {
                    blk[free[i]] = true;
                    local.push(single[i]);
                }
            }
            comp_sum.push(d.block_entropy(f, &blk)?);
            crude_sum.push(crude_constant(comp.count_ones() as usize, b) * ksum(local));
        }
    }
    let nb = fam.blocks.len() as f64;
    let total_single = ksum(single.iter().copied());
    let g = d.graph();
    let sub = crate::graph::Graph::new(
        n,
        &g.edges()
            .iter()
            .filter_map(|&(u, v)| {
                let iu = free.iter().position(|&x| x == u)?;
                let iv = free.iter().position(|&x| x == v)?;
                Some((iu, iv))
            })
            .collect::<Vec<_>>(),
    )?;
    let mut rearranged = Vec::new();
    let mut by_size = Vec::new();
    for (i, &s) in single.iter().enumerate() {
        let mut acc = Vec::new();
        let mut acc2 = Vec::new();
        for k in 1..=ell {
            let (_, _, p) = component_size_probability(&sub, i, ell, k)?;
            acc.push(p * crude_constant(k, b));
            let bound = ell as f64 / n as f64 * (2.0 * std::f64::consts::E * max_degree as f64 * theta).powi(k as i32 - 1);
            acc2.push(bound * crude_constant(k, b));
        }
        rearranged.push(s * ksum(acc));
        by_size.push(s * ksum(acc2));
    }
    let step = |name: &str, value: f64| ChainStep { name: name.into(), value };
    Ok(vec![
        step("entropy", ent),
        step("block_factorization", pre * avg_block),
        step("component_product", pre * ksum(comp_sum) / nb),
        step("crude_components", pre * ksum(crude_sum) / nb),
        step("rearranged", pre * ksum(rearranged)),
        step("component_size_bound", pre * ksum(by_size)),
        step("single_site", 18.0 * (1.0 / b).ln() / b.powi(4) * c_block * total_single),
    ])
}

/// Checks that a chain of right-hand sides is nondecreasing up to `tol`
/// (relative), with the rearrangement step an equality.
pub fn chain_holds(chain: &[ChainStep], tol: f64) -> bool {
    chain.windows(2).all(|w| {
        if w[1].name == "rearranged" {
            (w[1].value - w[0].value).abs() <= tol * w[0].value.abs().max(1e-300)
        } else {
            w[0].value <= w[1].value * (1.0 + tol) + 1e-15
        }
    })
}

/// Runs the block-to-single-site comparison at block fraction `theta`.
pub fn comparison_pipeline(
    d: &ExactDistribution,
    theta: f64,
    random_trials: usize,
    params: SearchParams,
) -> Result<PipelineReport> {
    let mb = d.marginal_bound()?;
    let b = mb.b;
    let max_degree = d.graph().max_degree().max(1);
    let limit = b * b / (12.0 * max_degree as f64);
    if !(theta > 0.0) || theta > limit {
        return Err(Error::ThetaTooLarge { theta, max: limit });
    }
    let n = d.free_vertices().len();
    let ell = ((theta * n as f64).ceil() as usize).max(1);
    let cert = build_levels(d)?.exact_certificate(n)?;
    let c_block = cert.c_block(ell).ok_or(Error::ParameterOutOfRange("missing block constant".into()))?;
    let c1_bound = 18.0 * (1.0 / b).ln() / b.powi(4) * c_block;
    let block = block_factorization_ratio(d, ell, Kind::Entropy, params)?;
    let single = tensorization_ratio(d, Kind::Entropy, params)?;
    let fam = BlockFamily::new(d, ell)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0xC4A1);
    let mut fs = vec![single.witness_f.clone(), block.witness_f.clone()];
    for _ in 0..random_trials {
        fs.push((0..d.support().len()).map(|_| rng.random_range(-3.0f64..3.0).exp()).collect());
    }
    let chains = fs
        .iter()
        .map(|f| comparison_chain(d, &fam, c_block, b, max_degree, theta, f))
        .collect::<Result<Vec<_>>>()?;
    let chains_hold = chains.iter().all(|c| chain_holds(c, 1e-9));
    let eta = d.spectral_independence()?.eta.max(0.0);
    let closed_form_min_n = 24.0 * max_degree as f64 / (b * b) * (4.0 * eta / (b * b) + 1.0);
    let closed_form = closed_form_tensorization(b, eta, max_degree, n).ok();
    let mut checks = vec![
        Check::le("block measured <= block certified", block.c_measured, c_block, 1e-9),
        Check::le("single-site measured <= 18 log(1/b)/b^4 C", single.c_measured, c1_bound, 1e-9),
    ];
    if let Some(c) = closed_form {
        checks.push(Check::le("single-site measured <= closed form", single.c_measured, c, 1e-9));
    }
    Ok(PipelineReport {
        b,
        max_degree,
        theta,
        ell,
        c_block_certified: c_block,
        c_block_measured: block.c_measured,
        c1_bound,
        c1_measured: single.c_measured,
        chains,
        chains_hold,
        eta,
        closed_form,
        closed_form_min_n,
        checks,
    })
}

/// Closed-form single-site constant `(18 log(1/b)/b^4) (24 Delta/b^2)^(4 eta/b^2 + 1)`,
/// available once `n >= (24 Delta/b^2)(4 eta/b^2 + 1)`.
pub fn closed_form_tensorization(b: f64, eta: f64, max_degree: usize, n: usize) -> Result<f64> {
    if !(b > 0.0 && b <= 1.0) || !(eta >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!("b = {b}, eta = {eta}")));
    }
    let x = 4.0 * eta / (b * b) + 1.0;
    let base = 24.0 * max_degree as f64 / (b * b);
    let required = base * x;
    if (n as f64) < required {
        return Err(Error::NTooSmall { n, required });
    }
    Ok(18.0 * (1.0 / b).ln() / b.powi(4) * base.powf(x))
}
