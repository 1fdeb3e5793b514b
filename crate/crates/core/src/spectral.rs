//! Subspace diagonalization: project H(x) onto a bitstring pool, extract
//! the lowest eigenpairs, and compute the transition matrix elements used
//! by the perturbation-theory gradients.
//!
//! The projected matrix is never materialized on the hot path. Pattern
//! Hamiltonians have few distinct flip masks, so H_eff acts as a handful of
//! grouped scatters: for each x-mask group, row(j) = index(b_j ^ x) (or
//! nothing when the flip leaves the pool) with a per-entry weight collecting
//! coefficient * phase of every term in the group. Without Y factors all
//! weights are real and the eigenproblem is solved by a real Lanczos
//! iteration with full reorthogonalization; small or Y-carrying problems
//! fall back to a dense Hermitian solve.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::PauliPattern;
use crate::pauli::{PauliOperator, PauliString};
use crate::pool::BitstringPool;

/// Pools at or below this size are always solved densely.
const DENSE_THRESHOLD: usize = 128;

/// Relative residual target for Lanczos Ritz pairs.
const LANCZOS_TOL: f64 = 1e-10;

/// Low-lying spectrum of a projected Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pool: Arc<BitstringPool>,
    energies: Vec<f64>,
    vectors: Vec<Vec<Complex64>>,
    requested_m: usize,
    clamped: bool,
    degenerate_warning: bool,
}

impl SpectralResult {
    pub fn pool(&self) -> &Arc<BitstringPool> {
        &self.pool
    }

    /// Ascending energies E_0..E_M.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_vector(&self) -> &[Complex64] {
        &self.vectors[0]
    }

    /// Orthonormal subspace eigenvectors, index 0 = ground state.
    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Number of excited states actually retained.
    pub fn num_excited(&self) -> usize {
        self.vectors.len() - 1
    }

    pub fn requested_m(&self) -> usize {
        self.requested_m
    }

    /// True when the requested excited count was clamped to |pool| - 1.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    /// True when the pool was 1-dimensional and no excited states exist.
    pub fn degenerate_warning(&self) -> bool {
        self.degenerate_warning
    }
}

/// Transition elements `<psi_0| P_p |psi_m>` plus spectral gaps, the
/// ingredients of the perturbation-theory gradient sums.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    /// Diagonal elements t0_p = <psi_0| P_p |psi_0> (imaginary part
    /// verified small, then discarded).
    pub t0: Vec<f64>,
    /// Off-diagonal elements, indexed [p][m - 1] for m = 1..=M.
    pub transitions: Vec<Vec<Complex64>>,
    /// Gaps E_m - E_0 for m = 1..=M.
    pub gaps: Vec<f64>,
    /// Excited states whose gap fell below the degeneracy tolerance; these
    /// are skipped by the gradient sums.
    pub excluded: Vec<bool>,
}

impl TransitionTable {
    pub fn num_excluded(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }
}

/// Gap below which an excited state is excluded from gradient denominators.
pub fn gap_tolerance(ground_energy: f64) -> f64 {
    1e-8 * ground_energy.abs().max(1.0)
}

/// Grouped scatter form of a projected Pauli-sum operator.
struct ProjectedAction {
    dim: usize,
    /// (row index per column, weight per column); u32::MAX marks leakage.
    groups: Vec<(Vec<u32>, Vec<Complex64>)>,
    all_real: bool,
}

const LEAK: u32 = u32::MAX;

impl ProjectedAction {
    fn new(op: &PauliOperator, pool: &BitstringPool) -> Result<ProjectedAction> {
        if pool.is_empty() {
            return Err(Error::invalid("cannot project onto an empty pool"));
        }
        if pool.num_qubits() != op.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: op.num_qubits(),
                got: pool.num_qubits(),
            });
        }
        let dim = pool.len();
        let mut groups: Vec<(u64, Vec<u32>, Vec<Complex64>)> = Vec::new();
        for &(c, s) in op.terms() {
            let x = s.x_mask();
            let idx = match groups.iter().position(|(g, _, _)| *g == x) {
                Some(i) => i,
                None => {
                    let rows: Vec<u32> = pool
                        .bitstrings()
                        .iter()
                        .map(|&b| pool.index_of(b ^ x).map_or(LEAK, |i| i as u32))
                        .collect();
                    groups.push((x, rows, vec![Complex64::new(0.0, 0.0); dim]));
                    groups.len() - 1
                }
            };
            let w = &mut groups[idx].2;
            for (j, &b) in pool.bitstrings().iter().enumerate() {
                let (phase, _) = s.apply_to_basis(b);
                w[j] += c * phase.to_c64();
            }
        }
        let all_real = groups.iter().all(|(_, _, w)| w.iter().all(|c| c.im == 0.0));
        Ok(ProjectedAction {
            dim,
            groups: groups.into_iter().map(|(_, r, w)| (r, w)).collect(),
            all_real,
        })
    }

    fn apply_real(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (rows, w) in &self.groups {
            for j in 0..self.dim {
                let i = rows[j];
                if i != LEAK {
                    out[i as usize] += w[j].re * x[j];
                }
            }
        }
    }

    fn dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::zeros(self.dim, self.dim);
        for (rows, w) in &self.groups {
            for j in 0..self.dim {
                let i = rows[j];
                if i != LEAK {
                    m[(i as usize, j)] += w[j].re;
                }
            }
        }
        m
    }

    fn dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for (rows, w) in &self.groups {
            for j in 0..self.dim {
                let i = rows[j];
                if i != LEAK {
                    m[(i as usize, j)] += w[j];
                }
            }
        }
        m
    }
}

/// Diagonalize H projected onto the pool; returns the ground state plus
/// min(m, |pool| - 1) excited states, energies ascending, eigenvector phase
/// fixed by rotating the largest-magnitude component real positive.
pub fn diagonalize(h: &PauliOperator, pool: &Arc<BitstringPool>, m: usize) -> Result<SpectralResult> {
    if m < 1 && pool.len() > 1 {
        return Err(Error::invalid("requested excited count must be >= 1"));
    }
    let dim = pool.len();
    let action = ProjectedAction::new(h, pool)?;
    let m_eff = m.min(dim.saturating_sub(1));
    let nev = m_eff + 1;

    let (mut energies, mut vectors) = if dim <= DENSE_THRESHOLD || !action.all_real || nev * 3 + 40 >= dim {
        solve_dense(&action, nev)?
    } else {
        match solve_lanczos_real(&action, nev) {
            Some(pairs) => pairs,
            // non-convergence is rare; the dense route always succeeds
            None => solve_dense(&action, nev)?,
        }
    };

    for v in &mut vectors {
        fix_phase(v);
    }
    check_residuals(&action, &energies, &vectors)?;
    energies.truncate(nev);
    vectors.truncate(nev);

    Ok(SpectralResult {
        pool: Arc::clone(pool),
        energies,
        vectors,
        requested_m: m,
        clamped: m_eff < m,
        degenerate_warning: dim == 1 && m >= 1,
    })
}

fn solve_dense(action: &ProjectedAction, nev: usize) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    // the real symmetric route is both faster and noticeably more accurate
    // than the complex Hermitian one, so take it whenever weights are real
    if action.all_real {
        let a = action.dense_real();
        let max_asym = (&a - a.transpose()).abs().max();
        if max_asym > 1e-12 {
            return Err(Error::Numerical(format!(
                "projected matrix not symmetric (max asymmetry {max_asym:e})"
            )));
        }
        let dim = a.nrows();
        let (values, basis) = crate::eigen::symmetric_eigen(&a)?;
        let take = nev.min(dim);
        let mut energies = Vec::with_capacity(take);
        let mut vectors = Vec::with_capacity(take);
        for idx in 0..take {
            energies.push(values[idx]);
            vectors.push(basis.column(idx).iter().map(|&x| Complex64::new(x, 0.0)).collect());
        }
        return Ok((energies, vectors));
    }

    let a = action.dense();
    // invariant check: projection of a Hermitian operator must be Hermitian
    let max_asym = (0..a.nrows())
        .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - a[(j, i)].conj()).norm())
        .fold(0.0f64, f64::max);
    if max_asym > 1e-12 {
        return Err(Error::Numerical(format!(
            "projected matrix not Hermitian (max asymmetry {max_asym:e})"
        )));
    }

    let dim = a.nrows();
    let (values, basis) = crate::eigen::hermitian_eigen(&a)?;
    let take = nev.min(dim);
    let mut energies = Vec::with_capacity(take);
    let mut vectors = Vec::with_capacity(take);
    for idx in 0..take {
        energies.push(values[idx]);
        vectors.push(basis.column(idx).iter().cloned().collect());
    }
    Ok((energies, vectors))
}

/// Partial Lanczos with full reorthogonalization on the real scatter form.
/// Returns None when the lowest `nev` Ritz pairs fail to converge within the
/// iteration budget.
fn solve_lanczos_real(action: &ProjectedAction, nev: usize) -> Option<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let dim = action.dim;
    let max_iter = dim.min((3 * nev + 100).max(140));

    // deterministic pseudorandom start vector
    let mut rng = ChaCha8Rng::seed_from_u64(0x9d1a_5c3e ^ (dim as u64));
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    normalize(&mut v);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0f64; dim];

    for j in 0..max_iter {
        action.apply_real(&basis[j], &mut w);
        if j > 0 {
            let b = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * vi;
            }
        }
        let a_j: f64 = basis[j].iter().zip(&w).map(|(v, wi)| v * wi).sum();
        alpha.push(a_j);
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= a_j * vi;
        }
        reorthogonalize(&basis, &mut w);

        let b_j = norm(&w);
        let breakdown = b_j <= 1e-13;

        let check = breakdown || j + 1 == max_iter || (j + 1 >= nev + 2 && (j + 1) % 12 == 0);
        if check {
            if let Some(result) = extract_converged(action, &alpha, &beta, b_j, nev, &basis, breakdown) {
                return Some(result);
            }
            if breakdown {
                // invariant subspace smaller than nev without convergence
                return None;
            }
        }
        if j + 1 == max_iter {
            break;
        }
        beta.push(b_j);
        basis.push(w.iter().map(|wi| wi / b_j).collect());
    }
    None
}

fn extract_converged(
    action: &ProjectedAction,
    alpha: &[f64],
    beta: &[f64],
    b_last: f64,
    nev: usize,
    basis: &[Vec<f64>],
    breakdown: bool,
) -> Option<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let j = alpha.len();
    if j < nev {
        return None;
    }
    let mut t = DMatrix::<f64>::zeros(j, j);
    for i in 0..j {
        t[(i, i)] = alpha[i];
        if i + 1 < j {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (theta_all, s_all) = crate::eigen::symmetric_eigen(&t).ok()?;

    for idx in 0..nev {
        let theta = theta_all[idx];
        let residual = b_last * s_all[(j - 1, idx)].abs();
        if !breakdown && residual > LANCZOS_TOL * theta.abs().max(1.0) {
            return None;
        }
    }

    let dim = basis[0].len();
    let mut energies = Vec::with_capacity(nev);
    let mut vectors = Vec::with_capacity(nev);
    let mut hx = vec![0.0f64; dim];
    for idx in 0..nev {
        let theta = theta_all[idx];
        let mut ritz = vec![0.0f64; dim];
        for (s, v) in s_all.column(idx).iter().zip(basis) {
            for (r, vi) in ritz.iter_mut().zip(v) {
                *r += s * vi;
            }
        }
        normalize(&mut ritz);
        // the tridiagonal estimate can be optimistic once reorthogonalization
        // kicks in, so accept only on the true residual
        action.apply_real(&ritz, &mut hx);
        let r2: f64 = hx
            .iter()
            .zip(&ritz)
            .map(|(h, x)| {
                let d = h - theta * x;
                d * d
            })
            .sum();
        if !breakdown && r2.sqrt() > 1e-9 * theta.abs().max(1.0) {
            return None;
        }
        energies.push(theta);
        vectors.push(ritz.into_iter().map(|x| Complex64::new(x, 0.0)).collect());
    }
    Some((energies, vectors))
}

/// Classical Gram-Schmidt against the whole basis, refined once when the
/// vector shrank enough to threaten orthogonality.
fn reorthogonalize(basis: &[Vec<f64>], w: &mut [f64]) {
    for _ in 0..2 {
        let before = norm(w);
        for v in basis {
            let overlap: f64 = v.iter().zip(w.iter()).map(|(vi, wi)| vi * wi).sum();
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= overlap * vi;
            }
        }
        if norm(w) > 0.5 * before {
            break;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v {
            *x /= n;
        }
    }
}

/// Rotate the largest-magnitude component to be real positive.
fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0usize;
    let mut best_mag = -1.0f64;
    for (i, a) in v.iter().enumerate() {
        let mag = a.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let rot = v[best].conj() / best_mag;
    for a in v.iter_mut() {
        *a *= rot;
    }
}

fn check_residuals(action: &ProjectedAction, energies: &[f64], vectors: &[Vec<Complex64>]) -> Result<()> {
    let dim = action.dim;
    let mut re = vec![0.0f64; dim];
    let mut hx = vec![0.0f64; dim];
    for (e, v) in energies.iter().zip(vectors) {
        // complex vectors only arise from the dense path; check those densely
        if v.iter().any(|a| a.im != 0.0) {
            continue;
        }
        for (slot, a) in re.iter_mut().zip(v) {
            *slot = a.re;
        }
        if !action.all_real {
            continue;
        }
        action.apply_real(&re, &mut hx);
        let r2: f64 = hx
            .iter()
            .zip(&re)
            .map(|(h, x)| {
                let d = h - e * x;
                d * d
            })
            .sum();
        if r2.sqrt() > 1e-8 * e.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "eigenpair residual {:e} exceeds tolerance at E = {e}",
                r2.sqrt()
            )));
        }
    }
    Ok(())
}

/// Compute the transition table needed by the gradient engine.
pub fn transition_elements(spec: &SpectralResult, pattern: &PauliPattern) -> Result<TransitionTable> {
    let pool = spec.pool();
    if pattern.num_qubits() != pool.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: pool.num_qubits(),
            got: pattern.num_qubits(),
        });
    }
    let dim = pool.len();
    let psi0 = spec.ground_vector();
    let m = spec.num_excited();
    let e0 = spec.ground_energy();
    let gap_tol = gap_tolerance(e0);

    let mut t0 = Vec::with_capacity(pattern.len());
    let mut transitions = Vec::with_capacity(pattern.len());
    let mut scratch = vec![Complex64::new(0.0, 0.0); dim];

    for s in pattern.strings() {
        apply_string_in_pool(s, pool, psi0, &mut scratch);
        // scratch = proj(P_p) |psi_0>
        let diag: Complex64 = psi0.iter().zip(&scratch).map(|(a, b)| a.conj() * b).sum();
        if diag.im.abs() > 1e-10 {
            return Err(Error::Numerical(format!(
                "diagonal transition element has imaginary part {:e}",
                diag.im
            )));
        }
        t0.push(diag.re);
        let mut row = Vec::with_capacity(m);
        for v in &spec.vectors()[1..] {
            // <psi_0| P_p |psi_m> = conj(<psi_m| P_p |psi_0>)
            let elem: Complex64 = v.iter().zip(&scratch).map(|(a, b)| a.conj() * b).sum();
            row.push(elem.conj());
        }
        transitions.push(row);
    }

    let gaps: Vec<f64> = spec.energies()[1..].iter().map(|e| e - e0).collect();
    let excluded: Vec<bool> = gaps.iter().map(|&g| g < gap_tol).collect();
    Ok(TransitionTable { t0, transitions, gaps, excluded })
}

fn apply_string_in_pool(s: &PauliString, pool: &BitstringPool, x: &[Complex64], out: &mut [Complex64]) {
    out.fill(Complex64::new(0.0, 0.0));
    for (j, &b) in pool.bitstrings().iter().enumerate() {
        let (phase, b_out) = s.apply_to_basis(b);
        if let Some(i) = pool.index_of(b_out) {
            out[i] += phase.to_c64() * x[j];
        }
    }
}

/// Dense version of the projected spectrum; shares no code with the scatter
/// path beyond `project` and serves as its oracle in tests.
pub fn dense_spectrum(h: &PauliOperator, pool: &BitstringPool) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let a = h.project(pool)?;
    let (energies, vecs) = crate::eigen::hermitian_eigen(&a)?;
    Ok((energies, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Axis;
    use approx::assert_abs_diff_eq;

    fn arc_pool(n: u32, bits: &[u64]) -> Arc<BitstringPool> {
        Arc::new(BitstringPool::from_bitstrings(n, bits.iter().copied()).unwrap())
    }

    #[test]
    fn two_by_two_x() {
        let h = PauliOperator::from_terms(1, [(-1.0, PauliString::single(1, 0, Axis::X).unwrap())]).unwrap();
        let pool = arc_pool(1, &[0, 1]);
        let spec = diagonalize(&h, &pool, 1).unwrap();
        assert_abs_diff_eq!(spec.energies()[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.energies()[1], 1.0, epsilon = 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g = spec.ground_vector();
        assert_abs_diff_eq!(g[0].re.abs(), s, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1].re.abs(), s, epsilon = 1e-12);
        // ground state of -X has equal signs under our phase convention
        assert!(g[0].re * g[1].re > 0.0);
    }

    #[test]
    fn closed_form_two_level() {
        let h = PauliOperator::from_terms(
            1,
            [
                (0.5, PauliString::single(1, 0, Axis::Z).unwrap()),
                (-0.4, PauliString::single(1, 0, Axis::X).unwrap()),
            ],
        )
        .unwrap();
        let pool = arc_pool(1, &[0, 1]);
        let spec = diagonalize(&h, &pool, 1).unwrap();
        let expected = -(0.25f64 + 0.16).sqrt();
        assert_abs_diff_eq!(spec.ground_energy(), expected, epsilon = 1e-12);
    }

    #[test]
    fn single_entry_pool_is_variational() {
        let h = PauliOperator::from_terms(1, [(1.0, PauliString::single(1, 0, Axis::X).unwrap())]).unwrap();
        let pool = arc_pool(1, &[0]);
        let spec = diagonalize(&h, &pool, 1).unwrap();
        assert_eq!(spec.energies().len(), 1);
        assert_abs_diff_eq!(spec.ground_energy(), 0.0, epsilon = 1e-12);
        assert!(spec.ground_energy() >= -1.0);
        assert!(spec.degenerate_warning());
        assert!(spec.clamped());
    }

    #[test]
    fn transition_elements_of_z() {
        // H = Z0, pool = [0, 1]: psi0 = |1>, psi1 = |0>.
        let h = PauliOperator::from_terms(1, [(1.0, PauliString::single(1, 0, Axis::Z).unwrap())]).unwrap();
        let pool = arc_pool(1, &[0, 1]);
        let spec = diagonalize(&h, &pool, 1).unwrap();
        let pattern = crate::model::generate_adjacent_pattern(1, &[Axis::X, Axis::Z]).unwrap();
        let table = transition_elements(&spec, &pattern).unwrap();
        // pattern order [X0, Z0]
        assert_abs_diff_eq!(table.transitions[0][0].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table.transitions[1][0].norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table.t0[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table.gaps[0], 2.0, epsilon = 1e-12);
        assert!(!table.excluded[0]);
    }

    #[test]
    fn lanczos_matches_dense_on_random_hamiltonian() {
        use rand::Rng;
        let n = 8u32;
        let pattern = crate::model::generate_adjacent_pattern(n, &[Axis::X, Axis::Z]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let h = PauliOperator::from_terms(
            n,
            pattern.strings().iter().map(|&s| (rng.gen_range(-1.0..=1.0), s)),
        )
        .unwrap();
        let pool = Arc::new(BitstringPool::full_basis(n).unwrap());
        let spec = diagonalize(&h, &pool, 3).unwrap();
        let (dense_e, _) = dense_spectrum(&h, &pool).unwrap();
        for m in 0..4 {
            assert_abs_diff_eq!(spec.energies()[m], dense_e[m], epsilon = 1e-8);
        }
    }

    #[test]
    fn vectors_are_orthonormal() {
        let n = 6u32;
        let pattern = crate::model::generate_adjacent_pattern(n, &[Axis::X, Axis::Z]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = PauliOperator::from_terms(
            n,
            pattern.strings().iter().map(|&s| (rng.gen_range(-1.0..=1.0), s)),
        )
        .unwrap();
        let pool = Arc::new(BitstringPool::full_basis(n).unwrap());
        let spec = diagonalize(&h, &pool, 4).unwrap();
        for (i, vi) in spec.vectors().iter().enumerate() {
            for (j, vj) in spec.vectors().iter().enumerate() {
                let dot: Complex64 = vi.iter().zip(vj).map(|(a, b)| a.conj() * b).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot.norm(), expected, epsilon = 1e-8);
            }
        }
    }
}
