//! Krylov-space action of `exp(-i H t)` on a statevector.
//!
//! The Hamiltonian is applied through an x-mask-grouped scatter: terms
//! sharing a flip mask are folded into one weight vector over the basis, so
//! a matvec costs O(groups * 2^n) instead of O(terms * 2^n). The
//! exponential itself is the standard Hermitian Lanczos approximation
//! `exp(-i H t) psi ~ |psi| V exp(-i T t) e_1` with the tridiagonal T
//! exponentiated by dense eigendecomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliOperator;

/// Grouped action of a Pauli-sum operator on the full 2^n space.
pub struct FullSpaceAction {
    dim: usize,
    groups: Vec<(u64, Vec<Complex64>)>,
}

impl FullSpaceAction {
    pub fn new(op: &PauliOperator) -> Result<FullSpaceAction> {
        let n = op.num_qubits();
        if n > 30 {
            return Err(Error::invalid("full-space action limited to n <= 30"));
        }
        let dim = 1usize << n;
        let mut groups: Vec<(u64, Vec<Complex64>)> = Vec::new();
        for &(c, s) in op.terms() {
            let x = s.x_mask();
            let idx = match groups.iter().position(|(g, _)| *g == x) {
                Some(i) => i,
                None => {
                    groups.push((x, vec![Complex64::new(0.0, 0.0); dim]));
                    groups.len() - 1
                }
            };
            let w = &mut groups[idx].1;
            for (b, slot) in w.iter_mut().enumerate() {
                let (phase, _) = s.apply_to_basis(b as u64);
                *slot += c * phase.to_c64();
            }
        }
        Ok(FullSpaceAction { dim, groups })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// out = H * psi (out is overwritten).
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for (x_mask, w) in &self.groups {
            let x = *x_mask as usize;
            for b in 0..self.dim {
                out[b ^ x] += w[b] * psi[b];
            }
        }
    }
}

/// exp(-i T t) e_1 for a real symmetric tridiagonal T given by (alpha, beta).
fn expi_tridiagonal(alpha: &[f64], beta: &[f64], t: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut tm = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        tm[(i, i)] = alpha[i];
        if i + 1 < m {
            tm[(i, i + 1)] = beta[i];
            tm[(i + 1, i)] = beta[i];
        }
    }
    let (values, vectors) = crate::eigen::symmetric_eigen(&tm)
        .expect("tridiagonal eigendecomposition cannot fail on a square matrix");
    // y = S exp(-i Lambda t) S^T e_1
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        let s_first = vectors[(0, j)];
        let phase = Complex64::new(0.0, -values[j] * t).exp();
        for i in 0..m {
            y[i] += vectors[(i, j)] * s_first * phase;
        }
    }
    y
}

/// Apply exp(-i H t) to a normalized state via a Lanczos approximation.
///
/// Grows the Krylov space until the residual estimate drops below `tol`
/// (absolute, on the output amplitudes). Breakdown means the Krylov space
/// is invariant and the result is exact.
pub fn evolve_krylov(action: &FullSpaceAction, psi: &[Complex64], t: f64, tol: f64) -> Vec<Complex64> {
    let dim = action.dim();
    if t == 0.0 {
        return psi.to_vec();
    }
    let max_m = dim.min(64);

    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let norm0: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let v0: Vec<Complex64> = psi.iter().map(|a| a / norm0).collect();
    basis.push(v0);

    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut y: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];

    for j in 0..max_m {
        action.apply(&basis[j], &mut w);
        if j > 0 {
            let b = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * vi;
            }
        }
        let a_j: f64 = basis[j]
            .iter()
            .zip(&w)
            .map(|(v, wi)| (v.conj() * wi).re)
            .sum();
        alpha.push(a_j);
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= a_j * vi;
        }
        // full reorthogonalization; m stays small so this is cheap
        for v in &basis {
            let overlap: Complex64 = v.iter().zip(&w).map(|(vi, wi)| vi.conj() * wi).sum();
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= overlap * vi;
            }
        }
        let b_j: f64 = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();

        y = expi_tridiagonal(&alpha, &beta, t);
        let residual = b_j * y[j].norm();
        if residual <= tol || b_j <= 1e-14 || j + 1 == max_m {
            break;
        }
        beta.push(b_j);
        basis.push(w.iter().map(|a| a / b_j).collect());
    }

    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (yi, v) in y.iter().zip(&basis) {
        let coeff = norm0 * yi;
        for (o, vi) in out.iter_mut().zip(v) {
            *o += coeff * vi;
        }
    }
    out
}
