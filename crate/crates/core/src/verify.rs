//! Verification suites built on independent dense oracles.
//!
//! The oracles here deliberately avoid the bitmask fast paths: operators are
//! materialized through explicit 2x2 Kronecker products and evolution goes
//! through a full eigendecomposition, so agreement with the production code
//! is meaningful evidence rather than a tautology.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::{evolve_trotter, sample, BackendConfig, EvolutionMode};
use crate::error::{Error, Result};
use crate::gradient::datapoint_gradients;
use crate::model::{
    generate_adjacent_pattern, logits, softmax_cross_entropy, Axis, DataPoint, ModelParameters,
};
use crate::pauli::{PauliOperator, PauliString, Statevector};
use crate::pool::BitstringPool;
use crate::spectral::{diagonalize, transition_elements};

/// One pass/fail line of a verification run.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub suite: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(suite: &str, passed: bool, detail: String) -> CheckReport {
        CheckReport { suite: suite.to_string(), passed, detail }
    }
}

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 4] = ["gradients", "variational", "trotter", "sampling"];

/// Knobs of a verification run.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub qubits: Option<u32>,
    pub seeds: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { qubits: None, seeds: 20 }
    }
}

/// Dense matrix of one Pauli string via explicit Kronecker products.
/// Qubit 0 is the least-significant bit, so the full matrix is
/// P_{n-1} (x) ... (x) P_0.
pub fn kron_string(s: &PauliString) -> DMatrix<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let single = |axis: Option<Axis>| -> DMatrix<Complex64> {
        let rows = match axis {
            None => [[one, zero], [zero, one]],
            Some(Axis::X) => [[zero, one], [one, zero]],
            Some(Axis::Y) => [[zero, -i], [i, zero]],
            Some(Axis::Z) => [[one, zero], [zero, -one]],
        };
        DMatrix::from_fn(2, 2, |r, c| rows[r][c])
    };
    let mut m = DMatrix::identity(1, 1);
    for q in (0..s.num_qubits()).rev() {
        m = m.kronecker(&single(s.axis_on(q)));
    }
    m
}

/// Dense matrix of a whole operator.
pub fn kron_matrix(op: &PauliOperator) -> DMatrix<Complex64> {
    let dim = 1usize << op.num_qubits();
    let mut m = DMatrix::zeros(dim, dim);
    for (c, s) in op.terms() {
        m += kron_string(s).scale(1.0) * Complex64::new(*c, 0.0);
    }
    m
}

/// e^{-iHt} |psi> via full Hermitian eigendecomposition of the dense oracle.
pub fn dense_evolve(h: &PauliOperator, psi: &Statevector, t: f64) -> Result<Statevector> {
    let m = kron_matrix(h);
    let (values, vectors) = crate::eigen::hermitian_eigen(&m)?;
    let v = DVector::from_column_slice(psi.amplitudes());
    let coeffs = vectors.adjoint() * v;
    let mut out = DVector::from_element(coeffs.len(), Complex64::new(0.0, 0.0));
    for (k, c) in coeffs.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -values[k] * t);
        out += vectors.column(k).scale(1.0) * (c * phase);
    }
    Statevector::from_amplitudes(psi.num_qubits(), out.iter().cloned().collect())
}

/// Exact ground energy from the dense oracle.
pub fn dense_ground_energy(h: &PauliOperator) -> Result<f64> {
    let m = kron_matrix(h);
    let (values, _) = crate::eigen::hermitian_eigen(&m)?;
    Ok(values[0])
}

fn random_operator(n: u32, rng: &mut impl Rng) -> Result<PauliOperator> {
    let pattern = generate_adjacent_pattern(n, &[Axis::X, Axis::Z])?;
    PauliOperator::from_terms(
        n,
        pattern.strings().iter().map(|&s| (rng.gen_range(-1.0..=1.0), s)),
    )
}

fn loss_of(params: &ModelParameters, x: &DataPoint, pool: &Arc<BitstringPool>, m: usize) -> Result<f64> {
    let h = params.assemble_hamiltonian(x)?;
    let spec = diagonalize(&h, pool, m)?;
    let l = logits(params, spec.ground_vector(), pool)?;
    Ok(softmax_cross_entropy(&l, x.label())?.0)
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff <= 1e-8 {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs()).max(1e-12)
    }
}

/// Central finite differences of the loss against the analytic gradients.
///
/// With a full-basis pool and M = 2^n - 1 the truncated perturbation-theory
/// gradient is the exact derivative, so agreement is expected to 1e-4.
pub fn suite_gradients(opts: &VerifyOptions) -> Result<CheckReport> {
    let qubit_sizes: Vec<u32> = match opts.qubits {
        Some(q) => vec![q],
        None => vec![3, 4, 5],
    };
    let step = 1e-4;
    let tol = 1e-4;
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    let mut worst_prop = 0.0f64;

    for &n in &qubit_sizes {
        if n > 10 {
            return Err(Error::invalid("gradient suite requires n <= 10"));
        }
        let pool = Arc::new(BitstringPool::full_basis(n)?);
        let m = (1usize << n) - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0xf0d1 ^ u64::from(n));
        let mut draws = 0usize;
        while draws < opts.seeds {
            let pattern = generate_adjacent_pattern(n, &[Axis::X, Axis::Z])?;
            let params = ModelParameters::random_init(pattern, 2, 2, 0.3, &mut rng)?;
            let x = DataPoint::from_class(
                vec![rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)],
                rng.gen_range(0..2),
                2,
            )?;
            let h = params.assemble_hamiltonian(&x)?;
            let spec = diagonalize(&h, &pool, m)?;
            let table = transition_elements(&spec, params.pattern())?;
            let grads = datapoint_gradients(&params, &x, &spec, &table)?;
            if grads.excluded_terms > 0 {
                // near-degenerate draw; the truncated sum is not the exact
                // derivative there, so redraw
                continue;
            }
            let e0 = spec.energies()[0];
            if spec.energies()[1..].iter().any(|e| e - e0 < 0.02) {
                // tiny gaps make the loss so ill-conditioned that finite
                // differences lose all significant digits; redraw
                continue;
            }
            draws += 1;

            let p_len = params.pattern().len();
            for p in 0..p_len {
                let fd = |delta: f64, which: usize| -> Result<f64> {
                    let mut pp = params.clone();
                    match which {
                        0 => pp.beta_mut()[p] += delta,
                        1 => pp.chi_mut()[0][p] += delta,
                        _ => pp.output_mut()[1][p] += delta,
                    }
                    loss_of(&pp, &x, &pool, m)
                };
                for which in 0..3 {
                    // Richardson-extrapolated central difference: O(h^4)
                    // truncation, which survives moderately small gaps
                    let diff = |h: f64| -> Result<f64> {
                        Ok((fd(h, which)? - fd(-h, which)?) / (2.0 * h))
                    };
                    let numeric = (4.0 * diff(step / 2.0)? - diff(step)?) / 3.0;
                    let analytic = match which {
                        0 => grads.g_beta[p],
                        1 => grads.g_chi[0][p],
                        _ => grads.g_o[1][p],
                    };
                    worst = worst.max(rel_err(analytic, numeric));
                    checked += 1;
                }
                for f in 0..params.num_features() {
                    let prop = (grads.g_chi[f][p] + x.features()[f] * grads.g_beta[p]).abs();
                    worst_prop = worst_prop.max(prop);
                }
            }
        }
    }
    let passed = worst <= tol && worst_prop <= 1e-12;
    Ok(CheckReport::new(
        "gradients",
        passed,
        format!(
            "{checked} components checked, worst relative error {worst:.2e} (tol {tol:.0e}), \
             worst chi/beta proportionality defect {worst_prop:.2e} (tol 1e-12)"
        ),
    ))
}

/// Variational bound and pool-growth monotonicity against dense ground truth.
pub fn suite_variational(opts: &VerifyOptions) -> Result<CheckReport> {
    let n = opts.qubits.unwrap_or(8);
    if n > 10 {
        return Err(Error::invalid("variational suite requires n <= 10"));
    }
    let dim = 1u64 << n;
    let trials = opts.seeds.max(50);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ u64::from(n));
    let mut bound_ok = 0usize;
    let mut chain_ok = 0usize;
    let mut dense_ok = 0usize;
    let mut dense_total = 0usize;

    for trial in 0..trials {
        let h = random_operator(n, &mut rng)?;
        let exact = dense_ground_energy(&h)?;

        // nested pool chain: 5 strictly growing random pools
        let mut bits: Vec<u64> = (0..dim).collect();
        for i in (1..bits.len()).rev() {
            let j = rng.gen_range(0..=i);
            bits.swap(i, j);
        }
        let sizes = [8usize, 16, 32, 64, 128];
        let mut last = f64::INFINITY;
        let mut monotone = true;
        let mut bounded = true;
        for &size in &sizes {
            let pool = Arc::new(BitstringPool::from_bitstrings(
                n,
                bits.iter().take(size.min(dim as usize)).copied(),
            )?);
            let spec = diagonalize(&h, &pool, 1)?;
            let e0 = spec.ground_energy();
            if e0 < exact - 1e-10 {
                bounded = false;
            }
            if e0 > last + 1e-10 {
                monotone = false;
            }
            last = e0;
        }
        if bounded {
            bound_ok += 1;
        }
        if monotone {
            chain_ok += 1;
        }

        // full-pool agreement with the dense oracle at small n
        if n <= 6 || trial < 5 {
            let small_n = n.min(6);
            let hs = random_operator(small_n, &mut rng)?;
            let full = Arc::new(BitstringPool::full_basis(small_n)?);
            let spec = diagonalize(&hs, &full, 1)?;
            let exact_small = dense_ground_energy(&hs)?;
            dense_total += 1;
            if (spec.ground_energy() - exact_small).abs() <= 1e-10 {
                dense_ok += 1;
            }
        }
    }
    let passed = bound_ok == trials && chain_ok == trials && dense_ok == dense_total;
    Ok(CheckReport::new(
        "variational",
        passed,
        format!(
            "{bound_ok}/{trials} bound satisfactions, {chain_ok}/{trials} monotone pool chains, \
             {dense_ok}/{dense_total} full-pool dense agreements at n <= 6"
        ),
    ))
}

/// First-order product formula: state error must halve per substep doubling.
pub fn suite_trotter(opts: &VerifyOptions) -> Result<CheckReport> {
    let n = opts.qubits.unwrap_or(6);
    if n > 10 {
        return Err(Error::invalid("trotter suite requires n <= 10"));
    }
    let total_t = 0.4;
    let seeds = opts.seeds.min(10).max(1);
    let mut ratios = Vec::new();
    let mut passed = true;

    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7077 ^ seed as u64);
        let h = random_operator(n, &mut rng)?;
        let psi0 = plus_state(n)?;
        let exact = dense_evolve(&h, &psi0, total_t)?;
        let mut errors = Vec::new();
        for doubling in 0..4 {
            let substeps = 4usize << doubling;
            let approx = evolve_trotter(&h, &psi0, total_t, substeps)?;
            let err: f64 = approx
                .amplitudes()
                .iter()
                .zip(exact.amplitudes())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            errors.push(err);
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            ratios.push(ratio);
            if !(1.7..=2.3).contains(&ratio) {
                passed = false;
            }
        }
    }
    let worst = ratios
        .iter()
        .cloned()
        .fold(f64::NAN, |a, r| if a.is_nan() || (r - 2.0).abs() > (a - 2.0).abs() { r } else { a });
    Ok(CheckReport::new(
        "trotter",
        passed,
        format!(
            "{} error ratios across {} seeds, all in [1.7, 2.3]: {}; ratio farthest from 2: {:.3}",
            ratios.len(),
            seeds,
            passed,
            worst
        ),
    ))
}

fn plus_state(n: u32) -> Result<Statevector> {
    crate::backend::prepare_reference(n, crate::backend::Reference::PlusState)
}

/// Empirical shot distribution against Born probabilities (total variation).
pub fn suite_sampling(opts: &VerifyOptions) -> Result<CheckReport> {
    let n = 3u32;
    let shots = 100_000usize;
    // fixed non-trivial state: evolve |+++> under a fixed Hamiltonian
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0a2);
    let h = random_operator(n, &mut rng)?;
    let cfg = BackendConfig { mode: EvolutionMode::Exact, ..BackendConfig::default() };
    let psi = crate::backend::evolve(&h, &plus_state(n)?, 0.7, &cfg)?;

    let mut shot_rng = ChaCha8Rng::seed_from_u64(opts.seeds as u64);
    let outcomes = sample(&psi, shots, &mut shot_rng)?;
    let mut counts = vec![0usize; 1 << n];
    for b in outcomes {
        counts[b as usize] += 1;
    }
    let tvd: f64 = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let empirical = c as f64 / shots as f64;
            (empirical - psi.probability(b as u64)).abs()
        })
        .sum::<f64>()
        / 2.0;
    let passed = tvd < 0.02;
    Ok(CheckReport::new(
        "sampling",
        passed,
        format!("total variation distance {tvd:.5} over {shots} shots (tol 0.02)"),
    ))
}

/// Run one named suite.
pub fn run_suite(name: &str, opts: &VerifyOptions) -> Result<CheckReport> {
    match name {
        "gradients" => suite_gradients(opts),
        "variational" => suite_variational(opts),
        "trotter" => suite_trotter(opts),
        "sampling" => suite_sampling(opts),
        other => Err(Error::invalid(format!(
            "unknown suite '{other}'; available suites: {}",
            SUITES.join(", ")
        ))),
    }
}

/// Run every suite with its default sizing.
pub fn run_all(opts: &VerifyOptions) -> Result<Vec<CheckReport>> {
    SUITES.iter().map(|s| run_suite(s, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::str::FromStr;

    #[test]
    fn kron_matches_bitmask_elements() {
        // cross-validate the two independent matrix constructions
        for text in ["XZ", "ZX", "XX", "IZ", "YI"] {
            let s = PauliString::from_str(text).unwrap();
            let m = kron_string(&s);
            for row in 0..4u64 {
                for col in 0..4u64 {
                    let expected = s.matrix_element(row, col);
                    assert_abs_diff_eq!(m[(row as usize, col as usize)].re, expected.re, epsilon = 1e-15);
                    assert_abs_diff_eq!(m[(row as usize, col as usize)].im, expected.im, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn dense_evolution_matches_backend_exact_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_operator(4, &mut rng).unwrap();
        let psi0 = plus_state(4).unwrap();
        let cfg = BackendConfig::default();
        let fast = crate::backend::evolve(&h, &psi0, 0.9, &cfg).unwrap();
        let oracle = dense_evolve(&h, &psi0, 0.9).unwrap();
        for (a, b) in fast.amplitudes().iter().zip(oracle.amplitudes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-10);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-10);
        }
    }

    #[test]
    fn sampling_suite_passes() {
        let report = suite_sampling(&VerifyOptions::default()).unwrap();
        assert!(report.passed, "{}", report.detail);
    }

    #[test]
    fn trotter_suite_passes_quick() {
        let report = suite_trotter(&VerifyOptions { qubits: Some(4), seeds: 2 }).unwrap();
        assert!(report.passed, "{}", report.detail);
    }

    #[test]
    fn gradient_suite_passes_quick() {
        let report = suite_gradients(&VerifyOptions { qubits: Some(3), seeds: 3 }).unwrap();
        assert!(report.passed, "{}", report.detail);
    }

    #[test]
    fn unknown_suite_is_an_error_listing_suites() {
        let err = run_suite("nope", &VerifyOptions::default()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("nope") && text.contains("gradients"));
    }
}
