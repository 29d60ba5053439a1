//! The weighted simplicial complex of partial configurations, its up/down
//! operators and local walks, and the entropy-contraction certificate built
//! from local spectral expansion and marginal bounds.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{entropy, ExactDistribution};
use crate::linalg;
use crate::optimize::{self, SearchParams};

/// A partial configuration; unassigned coordinates hold `u8::MAX`.
pub type Face = Vec<u8>;
pub const UNSET: u8 = u8::MAX;

/// Sparse row-major operator.
pub type Sparse = Vec<Vec<(usize, f64)>>;

#[derive(Debug, Clone)]
pub struct Level {
    pub k: usize,
    pub faces: Vec<Face>,
    pub probs: Vec<f64>,
    index: HashMap<Face, usize>,
}

impl Level {
    pub fn index_of(&self, face: &[u8]) -> Option<usize> {
        self.index.get(face).copied()
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

/// All levels `X(0), ..., X(n)` over the free vertices of a distribution.
/// Level `n` lists faces in the order of the distribution's support.
#[derive(Debug, Clone)]
pub struct Complex {
    dist: ExactDistribution,
    free: Vec<usize>,
    levels: Vec<Level>,
}

pub fn build_levels(d: &ExactDistribution) -> Result<Complex> {
    let free = d.free_vertices();
    let n = free.len();
    if n > 20 {
        return Err(Error::InstanceTooLarge(format!("{n} free vertices")));
    }
    let mut levels: Vec<Level> = (0..=n)
        .map(|k| Level { k, faces: Vec::new(), probs: Vec::new(), index: HashMap::new() })
        .collect();
    for mask in 0u64..(1u64 << n) {
        let k = mask.count_ones() as usize;
        let mut keep = vec![false; d.n()];
        for (i, &v) in free.iter().enumerate() {
            keep[v] = mask >> i & 1 == 1;
        }
        for (key, idx) in d.group_by_restriction(&keep) {
            let mass: f64 = crate::util::ksum(idx.iter().map(|&i| d.probs()[i]));
            let lvl = &mut levels[k];
            lvl.index.insert(key.clone(), lvl.faces.len());
            lvl.faces.push(key);
            lvl.probs.push(mass);
        }
    }
    // each k-subset carries total mass 1, so level k sums to C(n, k); dividing by
    // the computed sum keeps every level a probability vector to rounding
    for lvl in &mut levels {
        let total = crate::util::ksum(lvl.probs.iter().copied());
        lvl.probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(Complex { dist: d.clone(), free, levels })
}

impl Complex {
    pub fn n(&self) -> usize {
        self.free.len()
    }

    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k]
    }

    pub fn distribution(&self) -> &ExactDistribution {
        &self.dist
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    fn check_level(&self, k: usize, max: usize) -> Result<()> {
        if k > max {
            Err(Error::LevelTooHigh { level: k, max })
        } else {
            Ok(())
        }
    }

    /// Up operator `X(k) -> X(k+1)`: `pi_{k+1}(sigma) / ((k+1) pi_k(tau))`.
    pub fn up(&self, k: usize) -> Result<Sparse> {
        self.check_level(k, self.n().saturating_sub(1))?;
        let (lo, hi) = (&self.levels[k], &self.levels[k + 1]);
        let mut rows: Sparse = vec![Vec::new(); lo.len()];
        for (j, sigma) in hi.faces.iter().enumerate() {
            let mut tau = sigma.clone();
            for &v in &self.free {
                if sigma[v] == UNSET {
                    continue;
                }
                tau[v] = UNSET;
                let i = lo.index_of(&tau).expect("faces are closed under removal");
                rows[i].push((j, hi.probs[j] / ((k + 1) as f64 * lo.probs[i])));
                tau[v] = sigma[v];
            }
        }
        Ok(rows)
    }

    /// Down operator `X(k) -> X(k-1)`: drop a uniformly random element.
    pub fn down(&self, k: usize) -> Result<Sparse> {
        self.check_level(k, self.n())?;
        if k == 0 {
            return Err(Error::ParameterOutOfRange("down operator needs k >= 1".into()));
        }
        let lo = &self.levels[k - 1];
        Ok(self.levels[k]
            .faces
            .iter()
            .map(|sigma| {
                let mut tau = sigma.clone();
                let mut row = Vec::with_capacity(k);
                for &v in &self.free {
                    if sigma[v] != UNSET {
                        tau[v] = UNSET;
                        row.push((lo.index_of(&tau).unwrap(), 1.0 / k as f64));
                        tau[v] = sigma[v];
                    }
                }
                row
            })
            .collect())
    }

    /// `f^(r) = P_r^up ... P_{s-1}^up f^(s)`.
    pub fn project(&self, f: &[f64], s: usize, r: usize) -> Result<Vec<f64>> {
        if f.len() != self.levels[s].len() || r > s {
            return Err(Error::SupportMismatch);
        }
        let mut cur = f.to_vec();
        for k in (r..s).rev() {
            cur = apply(&self.up(k)?, &cur);
        }
        Ok(cur)
    }

    /// Dense product `P_r^up ... P_{s-1}^up`, size `|X(r)| x |X(s)|`.
    pub fn up_chain(&self, r: usize, s: usize) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::identity(self.levels[r].len(), self.levels[r].len());
        for k in r..s {
            m = mul_sparse(&m, &self.up(k)?, self.levels[k + 1].len());
        }
        Ok(m)
    }

    /// Dense product `P_s^down ... P_{r+1}^down`, size `|X(s)| x |X(r)|`.
    pub fn down_chain(&self, s: usize, r: usize) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::identity(self.levels[s].len(), self.levels[s].len());
        for k in ((r + 1)..=s).rev() {
            m = mul_sparse(&m, &self.down(k)?, self.levels[k - 1].len());
        }
        Ok(m)
    }

    /// Down-up walk on `X(s)` through `X(r)`.
    pub fn down_up(&self, s: usize, r: usize) -> Result<DMatrix<f64>> {
        self.check_level(s, self.n())?;
        if r >= s {
            return Err(Error::ParameterOutOfRange(format!("need r < s, got r = {r}, s = {s}")));
        }
        Ok(self.down_chain(s, r)? * self.up_chain(r, s)?)
    }

    /// Up-down walk on `X(r)` through `X(s)`.
    pub fn up_down(&self, r: usize, s: usize) -> Result<DMatrix<f64>> {
        self.check_level(s, self.n())?;
        if r >= s {
            return Err(Error::ParameterOutOfRange(format!("need r < s, got r = {r}, s = {s}")));
        }
        Ok(self.up_chain(r, s)? * self.down_chain(s, r)?)
    }

    /// Local walk on the link of a face at level `k <= n-2`.
    pub fn local_walk(&self, face: &[u8]) -> Result<LocalWalk> {
        let k = face.iter().filter(|&&x| x != UNSET).count();
        self.check_level(k, self.n().saturating_sub(2))?;
        let lvl = &self.levels[k];
        let i0 = lvl.index_of(face).ok_or(Error::InfeasibleFace)?;
        let p_tau = lvl.probs[i0];
        let l1 = &self.levels[k + 1];
        let l2 = &self.levels[k + 2];
        let q = self.dist.q() as u8;
        let mut states = Vec::new();
        let mut stationary = Vec::new();
        let mut ext = face.to_vec();
        for &v in &self.free {
            if face[v] != UNSET {
                continue;
            }
            for i in 0..q {
                ext[v] = i;
                if let Some(j) = l1.index_of(&ext) {
                    states.push((v, i));
                    stationary.push(l1.probs[j] / ((k + 1) as f64 * p_tau));
                }
            }
            ext[v] = UNSET;
        }
        let m = states.len();
        let c2 = ((k + 2) * (k + 1) / 2) as f64;
        let mut p = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                let ((u, i), (v, j)) = (states[a], states[b]);
                if u == v {
                    continue;
                }
                ext[u] = i;
                ext[v] = j;
                if let Some(t) = l2.index_of(&ext) {
                    let pair = l2.probs[t] / (c2 * p_tau);
                    p[(a, b)] = pair / (2.0 * stationary[a]);
                }
                ext[u] = UNSET;
                ext[v] = UNSET;
            }
        }
        let lambda2 = linalg::second_eigenvalue(&p, &stationary);
        Ok(LocalWalk { face: face.to_vec(), states, matrix: p, stationary, lambda2 })
    }

    /// `zeta_k = max` second eigenvalue of local walks at level `k`, for `k = 0..=n-2`.
    pub fn local_expansion(&self) -> Result<Vec<f64>> {
        let n = self.n();
        if n < 2 {
            return Ok(Vec::new());
        }
        (0..=n - 2)
            .map(|k| {
                let faces = self.levels[k].faces.clone();
                let vals = crate::util::par_map(faces, |f| self.local_walk(&f).map(|w| w.lambda2));
                vals.into_iter().try_fold(f64::NEG_INFINITY, |acc, v| v.map(|x| acc.max(x)))
            })
            .collect()
    }

    /// `b_k = min` link marginal at level `k`, for `k = 0..=n-1`.
    pub fn marginal_bounds(&self) -> Result<Vec<f64>> {
        let n = self.n();
        (0..n)
            .map(|k| {
                let up = self.up(k)?;
                Ok(up.iter().flatten().map(|&(_, w)| w).fold(f64::INFINITY, f64::min))
            })
            .collect()
    }

    /// `1 - Ent_{pi_r}(f^(r)) / Ent_{pi_s}(f)`.
    pub fn contraction_ratio(&self, f: &[f64], r: usize, s: usize) -> Result<f64> {
        let es = entropy(&self.levels[s].probs, f)?;
        if es <= 0.0 {
            return Err(Error::DegenerateEntropy);
        }
        let fr = self.project(f, s, r)?;
        Ok(1.0 - entropy(&self.levels[r].probs, &fr)? / es)
    }

    /// Smallest observed contraction ratio over random and adversarial functions on `X(s)`.
    pub fn measured_entropy_contraction(
        &self,
        r: usize,
        s: usize,
        random_trials: usize,
        params: SearchParams,
    ) -> Result<ContractionReport> {
        self.check_level(s, self.n())?;
        if r >= s {
            return Err(Error::ParameterOutOfRange(format!("need r < s, got r = {r}, s = {s}")));
        }
        let dim = self.levels[s].len();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5EED);
        let mut min_random = f64::INFINITY;
        for _ in 0..random_trials {
            let f: Vec<f64> = (0..dim).map(|_| rng.random_range(-4.0f64..4.0).exp()).collect();
            if let Ok(x) = self.contraction_ratio(&f, r, s) {
                min_random = min_random.min(x);
            }
        }
        let up = self.up_chain(r, s)?;
        let (ps, pr) = (&self.levels[s].probs, &self.levels[r].probs);
        let best = optimize::maximize(dim, params, &[], |f| {
            let (es, ges) = optimize::entropy_with_grad(ps, f);
            if es < 1e-14 {
                return None;
            }
            let fr: Vec<f64> = (&up * nalgebra::DVector::from_column_slice(f)).iter().copied().collect();
            let (er, ger) = optimize::entropy_with_grad(pr, &fr);
            let gr: Vec<f64> =
                (up.transpose() * nalgebra::DVector::from_vec(ger)).iter().copied().collect();
            Some((er / es, optimize::ratio_grad(er, &gr, es, &ges)))
        });
        let (min_adv, witness) = match best {
            Some(b) => (1.0 - b.value, b.witness),
            None => (f64::INFINITY, Vec::new()),
        };
        Ok(ContractionReport { r, s, min_random, min_adversarial: min_adv, witness })
    }

    /// Exact spectral gap of the down-up walk on `X(s)` through `X(r)`.
    pub fn down_up_gap(&self, s: usize, r: usize) -> Result<f64> {
        let p = self.down_up(s, r)?;
        let ev = linalg::reversible_spectrum(&p, &self.levels[s].probs);
        Ok(1.0 - ev.get(1).copied().unwrap_or(0.0))
    }

    /// Exact-data certificate on the complex truncated at `s`.
    pub fn exact_certificate(&self, s: usize) -> Result<Certificate> {
        let b = self.marginal_bounds()?;
        let zeta = self.local_expansion()?;
        certificate_from_bounds(self.n(), s, &b, &zeta)
    }

    /// Variance certificate for `P^down-up_{s,r}` compared with its exact gap.
    pub fn variance_certificate(&self, s: usize, r: usize) -> Result<VarianceCertificate> {
        let zeta = self.local_expansion()?;
        let alpha: Vec<f64> = zeta
            .iter()
            .take(s.saturating_sub(1))
            .map(|&z| if 1.0 + z <= 1e-12 { VARIANCE_ALPHA_CAP } else { ((1.0 - z) / (1.0 + z)).min(VARIANCE_ALPHA_CAP) })
            .collect();
        let gamma = gamma_products(&alpha, s);
        let bound = kappa_from_gamma(&gamma, r, s);
        let exact_gap = self.down_up_gap(s, r)?;
        let product_bound = if r + 1 == s {
            Some(zeta.iter().take(s.saturating_sub(1)).fold(1.0 / s as f64, |acc, z| acc * (1.0 - z)))
        } else {
            None
        };
        Ok(VarianceCertificate { s, r, zeta_k: zeta, alpha_k: alpha, gap_bound: bound, exact_gap, product_bound })
    }
}

/// Cap used for the variance contraction rate when a link has only one
/// top face, where any rate is valid.
pub const VARIANCE_ALPHA_CAP: f64 = 1e6;

pub fn apply(op: &Sparse, f: &[f64]) -> Vec<f64> {
    op.iter().map(|row| crate::util::ksum(row.iter().map(|&(j, w)| w * f[j]))).collect()
}

fn mul_sparse(m: &DMatrix<f64>, op: &Sparse, cols: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), cols);
    for (k, row) in op.iter().enumerate() {
        for &(j, w) in row {
            for i in 0..m.nrows() {
                let x = m[(i, k)];
                if x != 0.0 {
                    out[(i, j)] += x * w;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalWalk {
    pub face: Face,
    pub states: Vec<(usize, u8)>,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    pub stationary: Vec<f64>,
    pub lambda2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub r: usize,
    pub s: usize,
    pub min_random: f64,
    pub min_adversarial: f64,
    pub witness: Vec<f64>,
}

impl ContractionReport {
    pub fn min_observed(&self) -> f64 {
        self.min_random.min(self.min_adversarial)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceCertificate {
    pub s: usize,
    pub r: usize,
    pub zeta_k: Vec<f64>,
    pub alpha_k: Vec<f64>,
    pub gap_bound: f64,
    pub exact_gap: f64,
    /// `(1/s) prod_k (1 - zeta_k)` for the single-step walk `r = s - 1`.
    pub product_bound: Option<f64>,
}

/// Entropy-contraction certificate for the complex truncated at level `s`.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub n: usize,
    pub s: usize,
    pub b_k: Vec<f64>,
    pub zeta_k: Vec<f64>,
    pub alpha_k: Vec<f64>,
    #[serde(rename = "Gamma_k")]
    pub gamma_k: Vec<f64>,
    /// `kappa(r, s)` keyed by `"r,s"`.
    pub kappa: BTreeMap<String, f64>,
    /// `C(ell) = (ell/n) / kappa(n - ell, n)` keyed by `ell`; only when `s = n`.
    #[serde(rename = "C_block")]
    pub c_block: BTreeMap<String, f64>,
    /// Single-site constant `C(1)`; only when `s = n`.
    #[serde(rename = "C1_at")]
    pub c1_at: Option<f64>,
}

impl Certificate {
    pub fn kappa(&self, r: usize) -> f64 {
        self.kappa[&format!("{r},{}", self.s)]
    }

    pub fn c_block(&self, ell: usize) -> Option<f64> {
        self.c_block.get(&ell.to_string()).copied()
    }
}

/// Per-level contraction rate from `b_k`, `b_{k+1}`, `zeta_k` on a complex of top level `s`.
/// Negative expansion values are replaced by zero.
pub fn alpha_at(k: usize, s: usize, b_k: f64, b_next: f64, zeta: f64) -> f64 {
    let z = zeta.max(0.0);
    let d = (s - k) as f64;
    let first = 1.0 - 4.0 * z / (b_k * b_k * d * d);
    let second = (1.0 - z) / (4.0 + 2.0 * (1.0 / (2.0 * b_k * b_next)).ln());
    first.max(second).max(0.0)
}

fn gamma_products(alpha: &[f64], s: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(s);
    let mut acc = 1.0;
    for k in 0..s {
        g.push(acc);
        if k < alpha.len() {
            acc *= alpha[k];
        }
    }
    g
}

fn kappa_from_gamma(gamma: &[f64], r: usize, s: usize) -> f64 {
    let total: f64 = gamma[..s].iter().sum();
    gamma[r..s].iter().sum::<f64>() / total
}

/// Builds the certificate from per-level marginal bounds (`k = 0..=s-1`) and
/// expansion bounds (`k = 0..=s-2`).
pub fn certificate_from_bounds(n: usize, s: usize, b_k: &[f64], zeta_k: &[f64]) -> Result<Certificate> {
    if s == 0 || s > n {
        return Err(Error::ParameterOutOfRange(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
    }
    if b_k.len() < s || zeta_k.len() + 1 < s {
        return Err(Error::ParameterOutOfRange("not enough per-level bounds".into()));
    }
    if b_k[..s].iter().any(|&b| !(b > 0.0 && b <= 1.0)) {
        return Err(Error::ParameterOutOfRange("marginal bounds must lie in (0, 1]".into()));
    }
    let alpha: Vec<f64> = (0..s.saturating_sub(1)).map(|k| alpha_at(k, s, b_k[k], b_k[k + 1], zeta_k[k])).collect();
    let gamma = gamma_products(&alpha, s);
    let mut kappa = BTreeMap::new();
    for r in 0..s {
        kappa.insert(format!("{r},{s}"), kappa_from_gamma(&gamma, r, s));
    }
    let mut c_block = BTreeMap::new();
    let mut c1_at = None;
    if s == n {
        for ell in 1..=n {
            let c = (ell as f64 / n as f64) / kappa_from_gamma(&gamma, n - ell, n);
            c_block.insert(ell.to_string(), c);
            if ell == 1 {
                c1_at = Some(c);
            }
        }
    }
    Ok(Certificate {
        n,
        s,
        b_k: b_k[..s].to_vec(),
        zeta_k: zeta_k[..s.saturating_sub(1)].to_vec(),
        alpha_k: alpha,
        gamma_k: gamma,
        kappa,
        c_block,
        c1_at,
    })
}

/// Certificate from a global marginal bound `b` and spectral independence `eta`,
/// using `b_k = b/(n-k)` and `zeta_k = eta/(n-k-1)`.
pub fn certificate(b: f64, eta: f64, n: usize, s: usize) -> Result<Certificate> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::ParameterOutOfRange(format!("b = {b} not in (0, 1]")));
    }
    if !(eta >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!("eta = {eta} is negative")));
    }
    if n == 0 || s == 0 || s > n {
        return Err(Error::ParameterOutOfRange(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
    }
    let b_k: Vec<f64> = (0..n).map(|k| b / (n - k) as f64).collect();
    let zeta_k: Vec<f64> = (0..n.saturating_sub(1)).map(|k| eta / (n - k - 1) as f64).collect();
    certificate_from_bounds(n, s, &b_k, &zeta_k)
}

/// Closed-form lower bounds from a global `(b, eta)`.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedForm {
    /// `ceil(4 eta / b^2)`.
    pub r: usize,
    /// `prod_{i=1}^{R} (n-k-i)/(n-i)` for `k = 0..n-1`.
    pub gamma_hat: Vec<f64>,
    /// `ell (ell-1) ... (ell-R) / (n (n-1) ... (n-R))`, lower bound on `kappa(n-ell, n)`.
    pub kappa_lower: f64,
    /// `(ell/n) / kappa_lower`.
    pub c_upper: f64,
    /// `(2/theta)^(4 eta/b^2 + 1)` with `theta = ell/n`, valid when `n >= (2/theta)(4 eta/b^2 + 1)`.
    pub c_theta: f64,
    pub c_theta_valid: bool,
}

pub fn closed_form(b: f64, eta: f64, n: usize, ell: usize) -> Result<ClosedForm> {
    if !(b > 0.0 && b <= 1.0) || !(eta >= 0.0) || ell == 0 || ell > n {
        return Err(Error::ParameterOutOfRange(format!("b = {b}, eta = {eta}, ell = {ell}, n = {n}")));
    }
    let x = 4.0 * eta / (b * b);
    let r = x.ceil() as usize;
    let gamma_hat = (0..n)
        .map(|k| (1..=r).map(|i| if n > k + i { (n - k - i) as f64 / (n - i) as f64 } else { 0.0 }).product())
        .collect();
    let kappa_lower = (0..=r).map(|i| if ell > i { (ell - i) as f64 / (n - i) as f64 } else { 0.0 }).product::<f64>();
    let theta = ell as f64 / n as f64;
    Ok(ClosedForm {
        r,
        gamma_hat,
        kappa_lower,
        c_upper: theta / kappa_lower,
        c_theta: (2.0 / theta).powf(x + 1.0),
        c_theta_valid: n as f64 >= (2.0 / theta) * (x + 1.0),
    })
}
