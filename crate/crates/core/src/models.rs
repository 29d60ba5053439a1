//! Spin systems `(A, h)`, the named constructors, tree-uniqueness thresholds
//! and the Dobrushin influence check.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactDistribution;
use crate::graph::{line_graph, Graph, LineGraph};

/// Symmetric interaction matrix `a` and positive external field `h` on `q` spins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    pub q: usize,
    pub a: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    #[serde(default)]
    pub label: String,
}

impl SpinSystem {
    pub fn new(a: Vec<Vec<f64>>, h: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let q = h.len();
        if q == 0 || a.len() != q || a.iter().any(|r| r.len() != q) {
            return Err(Error::InvalidModel(format!("interaction matrix must be {q}x{q}")));
        }
        for i in 0..q {
            if !(h[i] > 0.0) || !h[i].is_finite() {
                return Err(Error::NonPositiveParameter { name: format!("h[{i}]"), value: h[i] });
            }
            for j in 0..q {
                if !(a[i][j] >= 0.0) || !a[i][j].is_finite() {
                    return Err(Error::InvalidModel(format!("a[{i}][{j}] = {} is not a finite nonnegative weight", a[i][j])));
                }
                if a[i][j] != a[j][i] {
                    return Err(Error::InvalidModel("interaction matrix is not symmetric".into()));
                }
            }
        }
        Ok(SpinSystem { q, a, h, label: label.into() })
    }

    /// Unnormalized weight of a full configuration.
    pub fn weight(&self, g: &Graph, sigma: &[u8]) -> f64 {
        let mut w: f64 = sigma.iter().map(|&s| self.h[s as usize]).product();
        for &(u, v) in g.edges() {
            w *= self.a[sigma[u] as usize][sigma[v] as usize];
        }
        w
    }

    /// Conditional law of the spin at `v` given the spins of its neighbors in `sigma`.
    pub fn local_conditional(&self, g: &Graph, sigma: &[u8], v: usize) -> Option<Vec<f64>> {
        let mut w: Vec<f64> = (0..self.q)
            .map(|i| g.neighbors(v).iter().fold(self.h[i], |acc, &u| acc * self.a[i][sigma[u] as usize]))
            .collect();
        let z: f64 = w.iter().sum();
        if z <= 0.0 {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= z);
        Some(w)
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name: name.into(), value })
    }
}

/// Hard-core model; spin 1 is occupied.
pub fn hardcore(lambda: f64) -> Result<SpinSystem> {
    positive("lambda", lambda)?;
    SpinSystem::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]], vec![1.0, lambda], format!("hardcore({lambda})"))
}

/// Ising model with edge activity `beta` on agreeing edges and field `lambda` on spin 1.
pub fn ising(beta: f64, lambda: f64) -> Result<SpinSystem> {
    positive("beta", beta)?;
    positive("lambda", lambda)?;
    SpinSystem::new(vec![vec![beta, 1.0], vec![1.0, beta]], vec![1.0, lambda], format!("ising({beta},{lambda})"))
}

/// Proper `q`-colorings.
pub fn colorings(q: usize) -> Result<SpinSystem> {
    if q == 0 {
        return Err(Error::NonPositiveParameter { name: "q".into(), value: 0.0 });
    }
    let a = (0..q).map(|i| (0..q).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
    SpinSystem::new(a, vec![1.0; q], format!("colorings({q})"))
}

/// Monomer-dimer model: hard-core on the line graph, spin 1 meaning the edge is matched.
pub fn monomer_dimer(g: &Graph, lambda: f64) -> Result<(LineGraph, SpinSystem)> {
    positive("lambda", lambda)?;
    let lg = line_graph(g)?;
    let mut sys = hardcore(lambda)?;
    sys.label = format!("monomer_dimer({lambda})");
    Ok((lg, sys))
}

/// Two-spin parameters: weight `beta` on 1-1 edges, `gamma` on 0-0 edges, field `lambda` on spin 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSpin {
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl TwoSpin {
    pub fn hardcore(lambda: f64) -> Self {
        TwoSpin { beta: 0.0, gamma: 1.0, lambda }
    }

    pub fn ising(beta: f64, lambda: f64) -> Self {
        TwoSpin { beta, gamma: beta, lambda }
    }

    pub fn to_system(self) -> Result<SpinSystem> {
        positive("lambda", self.lambda)?;
        SpinSystem::new(
            vec![vec![self.gamma, 1.0], vec![1.0, self.beta]],
            vec![1.0, self.lambda],
            format!("two_spin({},{},{})", self.beta, self.gamma, self.lambda),
        )
    }

    /// Tree recursion for the ratio of the root being 1 versus 0 with `d` children.
    pub fn recursion(&self, d: usize, r: f64) -> f64 {
        self.lambda * ((self.beta * r + 1.0) / (r + self.gamma)).powi(d as i32)
    }

    pub fn recursion_derivative(&self, d: usize, r: f64) -> f64 {
        let d_f = d as f64;
        d_f * self.lambda * (self.beta * r + 1.0).powi(d as i32 - 1) * (self.beta * self.gamma - 1.0)
            / (r + self.gamma).powi(d as i32 + 1)
    }
}

/// Model specification as stored in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    Hardcore { lambda: f64 },
    Ising { beta: f64, lambda: f64 },
    Colorings { q: usize },
    MonomerDimer { lambda: f64 },
    Raw { a: Vec<Vec<f64>>, h: Vec<f64> },
}

/// A spin system placed on a concrete graph. For monomer-dimer the graph is
/// the line graph and `line` keeps the base graph's edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: Graph,
    pub system: SpinSystem,
    pub line: Option<LineGraph>,
}

impl ModelSpec {
    pub fn instantiate(&self, g: &Graph) -> Result<Instance> {
        let (graph, system, line) = match self {
            ModelSpec::Hardcore { lambda } => (g.clone(), hardcore(*lambda)?, None),
            ModelSpec::Ising { beta, lambda } => (g.clone(), ising(*beta, *lambda)?, None),
            ModelSpec::Colorings { q } => (g.clone(), colorings(*q)?, None),
            ModelSpec::MonomerDimer { lambda } => {
                let (lg, sys) = monomer_dimer(g, *lambda)?;
                (lg.graph.clone(), sys, Some(lg))
            }
            ModelSpec::Raw { a, h } => (g.clone(), SpinSystem::new(a.clone(), h.clone(), "raw")?, None),
        };
        Ok(Instance { graph, system, line })
    }

    /// Copy of the spec with its activity replaced, when it has one.
    pub fn with_lambda(&self, value: f64) -> Option<ModelSpec> {
        match self {
            ModelSpec::Hardcore { .. } => Some(ModelSpec::Hardcore { lambda: value }),
            ModelSpec::Ising { beta, .. } => Some(ModelSpec::Ising { beta: *beta, lambda: value }),
            ModelSpec::MonomerDimer { .. } => Some(ModelSpec::MonomerDimer { lambda: value }),
            _ => None,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            ModelSpec::Hardcore { lambda } | ModelSpec::Ising { lambda, .. } | ModelSpec::MonomerDimer { lambda } => {
                Some(*lambda)
            }
            _ => None,
        }
    }
}

fn big(x: u64) -> BigInt {
    BigInt::from(x)
}

/// Hard-core uniqueness threshold `(D-1)^(D-1) / (D-2)^D` as an exact rational.
pub fn critical_fugacity(max_degree: usize) -> Result<BigRational> {
    if max_degree < 3 {
        return Err(Error::DegreeTooSmall(max_degree));
    }
    let d = max_degree as u64;
    let num = num_traits::pow(big(d - 1), (d - 1) as usize);
    let den = num_traits::pow(big(d - 2), d as usize);
    Ok(BigRational::new(num, den))
}

/// Antiferromagnetic and ferromagnetic Ising uniqueness thresholds `((D-2)/D, D/(D-2))`.
pub fn ising_critical(max_degree: usize) -> Result<(BigRational, BigRational)> {
    if max_degree < 3 {
        return Err(Error::DegreeTooSmall(max_degree));
    }
    let d = max_degree as u64;
    let lo = BigRational::new(big(d - 2), big(d));
    Ok((lo.clone(), BigRational::one() / lo))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeFixedPoint {
    pub d: usize,
    pub fixed_point: f64,
    pub derivative: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub per_degree: Vec<DegreeFixedPoint>,
    pub max_abs_derivative: f64,
    /// `1 - max_d |f_d'(R_d)|`; positive inside the uniqueness regime.
    pub gap: f64,
}

/// Solves the fixed points of the `d`-ary tree recursions, `1 <= d < max_degree`,
/// by bisection and reports the contraction gap.
pub fn uniqueness_gap(p: TwoSpin, max_degree: usize) -> Result<UniquenessReport> {
    positive("lambda", p.lambda)?;
    if p.beta < 0.0 || !(p.gamma > 0.0) {
        return Err(Error::InvalidModel("need beta >= 0 and gamma > 0".into()));
    }
    if p.beta * p.gamma >= 1.0 {
        return Err(Error::NotAntiferromagnetic(p.beta * p.gamma));
    }
    if max_degree < 2 {
        return Err(Error::DegreeTooSmall(max_degree));
    }
    let mut per_degree = Vec::new();
    for d in 1..max_degree {
        let g = |r: f64| p.recursion(d, r) - r;
        let (mut lo, mut hi) = (0.0f64, p.recursion(d, 0.0));
        if g(hi) > 0.0 {
            return Err(Error::FixedPointNoConverge(d));
        }
        let mut converged = false;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                converged = true;
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi.max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::FixedPointNoConverge(d));
        }
        let r = 0.5 * (lo + hi);
        per_degree.push(DegreeFixedPoint {
            d,
            fixed_point: r,
            derivative: p.recursion_derivative(d, r),
            residual: (p.recursion(d, r) - r).abs(),
        });
    }
    let max_abs = per_degree.iter().map(|x| x.derivative.abs()).fold(0.0, f64::max);
    Ok(UniquenessReport { per_degree, max_abs_derivative: max_abs, gap: 1.0 - max_abs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DobrushinReport {
    /// `influence[u][v]`: largest change of the law at `v` from changing the spin at `u`.
    pub influence: Vec<Vec<f64>>,
    /// Column sums `sum_u influence[u][v]`.
    pub column_sums: Vec<f64>,
    /// `c = 1 - max_v column_sum`.
    pub c: f64,
    pub holds: bool,
}

/// Exact Dobrushin influence matrix over feasible boundary conditions.
pub fn dobrushin_check(system: &SpinSystem, g: &Graph) -> Result<DobrushinReport> {
    let dist = ExactDistribution::enumerate(g, system)?;
    let n = g.n();
    let mut influence = vec![vec![0.0f64; n]; n];
    for v in 0..n {
        let boundaries: HashSet<Vec<u8>> = dist
            .support()
            .iter()
            .map(|s| {
                let mut b = s.clone();
                b[v] = 0;
                b
            })
            .collect();
        for tau in &boundaries {
            let base = match system.local_conditional(g, tau, v) {
                Some(p) => p,
                None => continue,
            };
            for &u in g.neighbors(v) {
                for s in 0..system.q as u8 {
                    if s == tau[u] {
                        continue;
                    }
                    let mut xi = tau.clone();
                    xi[u] = s;
                    if !boundaries.contains(&xi) {
                        continue;
                    }
                    if let Some(p) = system.local_conditional(g, &xi, v) {
                        let tv = 0.5 * base.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum::<f64>();
                        influence[u][v] = influence[u][v].max(tv);
                    }
                }
            }
        }
    }
    let column_sums: Vec<f64> = (0..n).map(|v| (0..n).map(|u| influence[u][v]).sum()).collect();
    let c = 1.0 - column_sums.iter().copied().fold(0.0, f64::max);
    Ok(DobrushinReport { influence, column_sums, c, holds: c > 0.0 })
}
