//! Multiplicative-weights ascent for ratio objectives over positive functions.
//! The search runs over `g` with `f = exp(g)`, so every step is a
//! multiplicative update of `f`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::util::{entropy_term, ksum};

/// Smallest value a search function may take.
pub const FLOOR: f64 = 1e-12;
const G_MIN: f64 = -27.631_021_115_928_547; // ln(1e-12)
const G_MAX: f64 = 30.0;

#[derive(Debug, Clone, Copy)]
pub struct SearchParams {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { restarts: 20, iterations: 500, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub value: f64,
    pub witness: Vec<f64>,
}

/// Value and gradient (with respect to `f`) of `Ent_pi(f)`.
pub fn entropy_with_grad(pi: &[f64], f: &[f64]) -> (f64, Vec<f64>) {
    let m = ksum(pi.iter().zip(f).map(|(a, b)| a * b));
    let logs: Vec<f64> = f.iter().map(|&x| if x > 0.0 { (x / m).ln() } else { 0.0 }).collect();
    let value = m * ksum(pi.iter().zip(f).map(|(p, &x)| p * entropy_term(x / m)));
    let grad = pi.iter().zip(&logs).map(|(p, l)| p * l).collect();
    (value, grad)
}

/// Value and gradient of `Var_pi(f)`.
pub fn variance_with_grad(pi: &[f64], f: &[f64]) -> (f64, Vec<f64>) {
    let m = ksum(pi.iter().zip(f).map(|(a, b)| a * b));
    let value = ksum(pi.iter().zip(f).map(|(p, x)| p * (x - m) * (x - m)));
    let grad = pi.iter().zip(f).map(|(p, x)| 2.0 * p * (x - m)).collect();
    (value, grad)
}

/// Gradient of `num/den` from the parts.
pub fn ratio_grad(num: f64, gnum: &[f64], den: f64, gden: &[f64]) -> Vec<f64> {
    gnum.iter().zip(gden).map(|(a, b)| (a * den - num * b) / (den * den)).collect()
}

fn evaluate<F>(obj: &F, g: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let f: Vec<f64> = g.iter().map(|x| x.exp().max(FLOOR)).collect();
    let (v, gf) = obj(&f)?;
    if !v.is_finite() {
        return None;
    }
    let gg = gf.iter().zip(&f).map(|(a, b)| a * b).collect();
    Some((v, gg, f))
}

/// Maximizes `obj(f)` over positive `f` of length `dim`. `obj` returns the value
/// and its gradient in `f`, or `None` where it is undefined. Extra starting
/// points are given as functions `f`.
pub fn maximize<F>(dim: usize, params: SearchParams, starts: &[Vec<f64>], obj: F) -> Option<SearchResult>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut inits: Vec<Vec<f64>> =
        starts.iter().map(|f| f.iter().map(|x| x.max(FLOOR).ln().clamp(G_MIN, G_MAX)).collect()).collect();
    for r in 0..params.restarts {
        let g: Vec<f64> = match r % 3 {
            0 => (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            1 => (0..dim).map(|_| rng.random_range(-6.0..6.0)).collect(),
            _ => {
                let hot = rng.random_range(0..dim.max(1));
                (0..dim).map(|i| if i == hot { 0.0 } else { rng.random_range(-12.0..-4.0) }).collect()
            }
        };
        inits.push(g);
    }
    let mut best: Option<SearchResult> = None;
    for mut g in inits {
        let Some((mut val, mut grad, mut f)) = evaluate(&obj, &g) else { continue };
        let mut step = 1.0;
        for _ in 0..params.iterations {
            let norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                break;
            }
            let mut improved = false;
            while step > 1e-12 {
                let cand: Vec<f64> =
                    g.iter().zip(&grad).map(|(x, d)| (x + step * d / norm).clamp(G_MIN, G_MAX)).collect();
                match evaluate(&obj, &cand) {
                    Some((v, gr, fc)) if v > val => {
                        g = cand;
                        val = v;
                        grad = gr;
                        f = fc;
                        step *= 1.6;
                        improved = true;
                        break;
                    }
                    _ => step *= 0.5,
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().map_or(true, |b| val > b.value) {
            best = Some(SearchResult { value: val, witness: f });
        }
    }
    best
}
