//! Eigenvalue helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};

const SCHUR_ITERS_PER_ROW: usize = 500;
const SCHUR_ATTEMPTS: usize = 6;

/// All eigenvalues of a general square matrix (real Schur form).
///
/// The shifted QR iteration can stall on block anti-diagonal matrices, so a
/// failed attempt is retried on `H M H` for a Householder reflection `H`,
/// which has the same spectrum.
pub fn eigenvalues_general(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    for attempt in 0..SCHUR_ATTEMPTS {
        if let Some(s) = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_ITERS_PER_ROW * n) {
            return Ok(s.complex_eigenvalues().iter().copied().collect());
        }
        let h = householder(n, attempt);
        a = &h * a * &h;
    }
    Err(Error::EigenNoConverge(n))
}

/// `I - 2 v v^T / |v|^2` for a fixed irregular `v` depending on `salt`.
fn householder(n: usize, salt: usize) -> DMatrix<f64> {
    let v = DVector::from_fn(n, |i, _| 1.0 + ((i + 1) as f64 * (0.618_033_988_75 + salt as f64 * 0.414_213_562)).fract());
    DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared())
}

/// Eigenvalues of a symmetric matrix in descending order. The input is symmetrized first.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let s = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Spectrum, descending, of a matrix reversible with respect to the positive weights `pi`,
/// computed from `diag(pi)^(1/2) P diag(pi)^(-1/2)`.
pub fn reversible_spectrum(p: &DMatrix<f64>, pi: &[f64]) -> Vec<f64> {
    symmetric_eigenvalues(&symmetrize(p, pi))
}

pub fn symmetrize(p: &DMatrix<f64>, pi: &[f64]) -> DMatrix<f64> {
    let n = p.nrows();
    DMatrix::from_fn(n, n, |i, j| p[(i, j)] * (pi[i] / pi[j]).sqrt())
}

/// Second largest eigenvalue of a reversible stochastic matrix (`-inf` for a single state).
pub fn second_eigenvalue(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    reversible_spectrum(p, pi).get(1).copied().unwrap_or(f64::NEG_INFINITY)
}
