//! Simulated sampling backend: reference-state preparation, time evolution
//! (exact Krylov-expm or first-order Trotter), Born sampling, and bitstring
//! pool construction.
//!
//! Krylov states are built incrementally, `|Psi_k> = U |Psi_{k-1}>` with
//! `U = exp(-i H dt)` (or one Trotter block per dt), matching a hardware
//! layout where each Krylov index adds one more evolution block.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{evolve_krylov, FullSpaceAction};
use crate::pauli::{PauliOperator, Statevector};
use crate::pool::{BitstringPool, PoolOrigin};

/// Accuracy target for the exact-mode Krylov exponential, per dt step.
const EXPM_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMode {
    Exact,
    Trotter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    PlusState,
    ZeroState,
}

/// Configuration of the simulated quantum backend.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub mode: EvolutionMode,
    /// First-order product-formula substeps per dt increment (trotter mode).
    pub trotter_substeps_per_dt: usize,
    /// Number of Krylov circuits K; indices run k = 0..K-1.
    pub krylov_dim: usize,
    /// Evolution time step between consecutive Krylov states.
    pub dt: f64,
    pub shots_per_circuit: usize,
    pub reference: Reference,
    /// Test mode: replace shot sampling by "every bitstring with Born
    /// probability >= cutoff, exactly once".
    pub deterministic_cutoff: Option<f64>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            mode: EvolutionMode::Exact,
            trotter_substeps_per_dt: 1,
            krylov_dim: 8,
            dt: 0.05,
            shots_per_circuit: 200,
            reference: Reference::PlusState,
            deterministic_cutoff: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(Error::Config("dt must be positive".into()));
        }
        if self.krylov_dim < 1 {
            return Err(Error::Config("krylov_dim must be >= 1".into()));
        }
        if self.shots_per_circuit < 1 && self.deterministic_cutoff.is_none() {
            return Err(Error::Config("shots_per_circuit must be >= 1".into()));
        }
        if self.mode == EvolutionMode::Trotter && self.trotter_substeps_per_dt < 1 {
            return Err(Error::Config("trotter_substeps_per_dt must be >= 1".into()));
        }
        if let Some(c) = self.deterministic_cutoff {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Config("deterministic_cutoff must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Prepare the reference state |Psi_init>.
pub fn prepare_reference(n: u32, kind: Reference) -> Result<Statevector> {
    match kind {
        Reference::ZeroState => Statevector::basis_state(n, 0),
        Reference::PlusState => {
            let dim = 1usize << n;
            let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
            Statevector::from_amplitudes(n, vec![amp; dim])
        }
    }
}

/// Apply exp(-i H t) per the backend mode.
pub fn evolve(h: &PauliOperator, psi: &Statevector, t: f64, cfg: &BackendConfig) -> Result<Statevector> {
    if psi.num_qubits() != h.num_qubits() {
        return Err(Error::DimensionMismatch { expected: h.num_qubits(), got: psi.num_qubits() });
    }
    if t < 0.0 {
        return Err(Error::invalid("evolution time must be non-negative"));
    }
    if t == 0.0 {
        return Ok(psi.clone());
    }
    match cfg.mode {
        EvolutionMode::Exact => {
            let action = FullSpaceAction::new(h)?;
            evolve_exact_with_action(&action, h.one_norm(), psi, t)
        }
        EvolutionMode::Trotter => {
            // t is split into substeps relative to one dt block
            let blocks = (t / cfg.dt).round().max(1.0) as usize;
            let substeps = blocks * cfg.trotter_substeps_per_dt;
            evolve_trotter(h, psi, t, substeps)
        }
    }
}

fn evolve_exact_with_action(
    action: &FullSpaceAction,
    h_norm: f64,
    psi: &Statevector,
    t: f64,
) -> Result<Statevector> {
    // keep the Krylov dimension per step small by bounding |H| * t_step
    let steps = ((h_norm * t) / 8.0).ceil().max(1.0) as usize;
    let t_step = t / steps as f64;
    let mut amps = psi.amplitudes().to_vec();
    for _ in 0..steps {
        amps = evolve_krylov(action, &amps, t_step, EXPM_TOL);
    }
    let mut out = Statevector::from_amplitudes(psi.num_qubits(), amps)?;
    renormalize_guard(&mut out)?;
    Ok(out)
}

/// First-order product formula: [prod_terms exp(-i c_q (t/r) P_q)]^r in
/// term order.
pub fn evolve_trotter(h: &PauliOperator, psi: &Statevector, t: f64, substeps: usize) -> Result<Statevector> {
    if substeps < 1 {
        return Err(Error::invalid("substeps must be >= 1"));
    }
    let dim = psi.amplitudes().len();
    let dt = t / substeps as f64;
    let mut amps = psi.amplitudes().to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
    for _ in 0..substeps {
        for &(c, s) in h.terms() {
            let theta = c * dt;
            let (cos_t, sin_t) = (theta.cos(), theta.sin());
            // exp(-i theta P) psi = cos(theta) psi - i sin(theta) P psi,
            // with (P psi)[b] = phase(b^x) psi[b^x]
            let x = s.x_mask() as usize;
            for (b, slot) in scratch.iter_mut().enumerate() {
                let (phase, _) = s.apply_to_basis(b as u64);
                *slot = phase.to_c64() * amps[b];
            }
            for b in 0..dim {
                let p_psi = scratch[b ^ x];
                amps[b] = cos_t * amps[b] - Complex64::new(0.0, sin_t) * p_psi;
            }
        }
    }
    let mut out = Statevector::from_amplitudes(psi.num_qubits(), amps)?;
    renormalize_guard(&mut out)?;
    Ok(out)
}

fn renormalize_guard(psi: &mut Statevector) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Numerical(format!("evolution lost normalization: |psi| = {norm}")));
    }
    psi.normalize();
    Ok(())
}

/// Draw `shots` i.i.d. bitstrings from the Born distribution of `psi`.
pub fn sample(psi: &Statevector, shots: usize, rng: &mut impl Rng) -> Result<Vec<u64>> {
    if !psi.is_normalized(1e-8) {
        return Err(Error::contract("cannot sample from an unnormalized state"));
    }
    let mut cdf = Vec::with_capacity(psi.amplitudes().len());
    let mut acc = 0.0;
    for a in psi.amplitudes() {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let mut draws = Vec::with_capacity(shots);
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        draws.push(idx as u64);
    }
    Ok(draws)
}

/// Deterministic replacement for sampling: every bitstring whose Born
/// probability is at least `cutoff`, once, in ascending bitstring order.
pub fn deterministic_support(psi: &Statevector, cutoff: f64) -> Result<Vec<u64>> {
    if !psi.is_normalized(1e-8) {
        return Err(Error::contract("cannot sample from an unnormalized state"));
    }
    Ok((0..psi.amplitudes().len() as u64)
        .filter(|&b| psi.probability(b) >= cutoff)
        .collect())
}

fn draw_outcomes(psi: &Statevector, cfg: &BackendConfig, rng: &mut impl Rng) -> Result<Vec<u64>> {
    match cfg.deterministic_cutoff {
        Some(cutoff) => deterministic_support(psi, cutoff),
        None => sample(psi, cfg.shots_per_circuit, rng),
    }
}

/// Build the SKQD bitstring pool for one Hamiltonian: sample every Krylov
/// state |Psi_k>, k = 0..K-1, and keep the ordered union of outcomes.
pub fn build_pool(
    h: &PauliOperator,
    cfg: &BackendConfig,
    rng: &mut impl Rng,
    datapoint: u32,
) -> Result<BitstringPool> {
    cfg.validate()?;
    let n = h.num_qubits();
    let mut pool = BitstringPool::new(n);
    let mut psi = prepare_reference(n, cfg.reference)?;

    let exact_action = match cfg.mode {
        EvolutionMode::Exact => Some(FullSpaceAction::new(h)?),
        EvolutionMode::Trotter => None,
    };
    let h_norm = h.one_norm();

    for k in 0..cfg.krylov_dim {
        if k > 0 {
            psi = match &exact_action {
                Some(action) => evolve_exact_with_action(action, h_norm, &psi, cfg.dt)?,
                None => evolve_trotter(h, &psi, cfg.dt, cfg.trotter_substeps_per_dt)?,
            };
        }
        for b in draw_outcomes(&psi, cfg, rng)? {
            pool.insert(b, PoolOrigin::new(datapoint, k as u32))?;
        }
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Axis, PauliString};
    use crate::rng::{stream, StreamDomain};
    use approx::assert_abs_diff_eq;

    fn op1(c: f64, axis: Axis) -> PauliOperator {
        PauliOperator::from_terms(1, [(c, PauliString::single(1, 0, axis).unwrap())]).unwrap()
    }

    #[test]
    fn reference_states() {
        let plus = prepare_reference(2, Reference::PlusState).unwrap();
        for a in plus.amplitudes() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
        let zero = prepare_reference(3, Reference::ZeroState).unwrap();
        assert_abs_diff_eq!(zero.amplitudes()[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(zero.probability(0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_time_is_identity() {
        let h = op1(0.7, Axis::X);
        let psi = Statevector::basis_state(1, 0).unwrap();
        let out = evolve(&h, &psi, 0.0, &BackendConfig::default()).unwrap();
        assert_eq!(out.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn negative_time_rejected() {
        let h = op1(1.0, Axis::X);
        let psi = Statevector::basis_state(1, 0).unwrap();
        assert!(evolve(&h, &psi, -0.1, &BackendConfig::default()).is_err());
    }

    #[test]
    fn x_rotation_half_period() {
        // exp(-i X pi/2) = -i X, so |0> -> -i |1>
        let h = op1(1.0, Axis::X);
        let psi = Statevector::basis_state(1, 0).unwrap();
        let out = evolve(&h, &psi, std::f64::consts::FRAC_PI_2, &BackendConfig::default()).unwrap();
        assert!((out.amplitudes()[0]).norm() < 1e-10);
        assert!((out.amplitudes()[1] - Complex64::new(0.0, -1.0)).norm() < 1e-10);
        assert_abs_diff_eq!(out.probability(1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_hamiltonian_is_phase_only() {
        let h = op1(0.9, Axis::Z);
        let psi = Statevector::basis_state(1, 0).unwrap();
        let out = evolve(&h, &psi, 1.3, &BackendConfig::default()).unwrap();
        assert_abs_diff_eq!(out.probability(0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sampling_from_basis_state_is_constant() {
        let psi = Statevector::basis_state(2, 0b10).unwrap();
        let mut rng = stream(1, StreamDomain::TrainPool, 0, 0);
        let draws = sample(&psi, 50, &mut rng).unwrap();
        assert!(draws.iter().all(|&b| b == 0b10));
    }

    #[test]
    fn deterministic_cutoff_returns_support_once() {
        let psi = prepare_reference(2, Reference::PlusState).unwrap();
        let support = deterministic_support(&psi, 0.1).unwrap();
        assert_eq!(support, vec![0b00, 0b01, 0b10, 0b11]);
    }

    #[test]
    fn unnormalized_state_rejected_for_sampling() {
        let psi = Statevector::from_amplitudes(
            1,
            vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        let mut rng = stream(1, StreamDomain::TrainPool, 0, 0);
        assert!(sample(&psi, 1, &mut rng).is_err());
    }

    #[test]
    fn pool_from_zero_state_without_evolution() {
        let h = op1(0.3, Axis::Z);
        let cfg = BackendConfig {
            krylov_dim: 1,
            reference: Reference::ZeroState,
            ..BackendConfig::default()
        };
        let mut rng = stream(2, StreamDomain::TrainPool, 0, 0);
        let pool = build_pool(&h, &cfg, &mut rng, 0).unwrap();
        assert_eq!(pool.bitstrings(), &[0]);
    }

    #[test]
    fn diagonal_hamiltonian_keeps_pool_at_zero() {
        let h = op1(0.8, Axis::Z);
        let cfg = BackendConfig {
            krylov_dim: 4,
            reference: Reference::ZeroState,
            ..BackendConfig::default()
        };
        let mut rng = stream(3, StreamDomain::TrainPool, 0, 0);
        let pool = build_pool(&h, &cfg, &mut rng, 0).unwrap();
        assert_eq!(pool.bitstrings(), &[0]);
    }

    #[test]
    fn uniform_state_covers_both_outcomes() {
        let h = op1(1.0, Axis::X);
        let cfg = BackendConfig { krylov_dim: 2, shots_per_circuit: 64, ..BackendConfig::default() };
        let mut rng = stream(4, StreamDomain::TrainPool, 0, 0);
        let pool = build_pool(&h, &cfg, &mut rng, 0).unwrap();
        let mut bits = pool.bitstrings().to_vec();
        bits.sort_unstable();
        assert_eq!(bits, vec![0, 1]);
    }

    #[test]
    fn pool_is_deterministic_given_seed() {
        let h = PauliOperator::from_terms(
            3,
            [
                (0.4, PauliString::single(3, 0, Axis::X).unwrap()),
                (-0.2, PauliString::single(3, 1, Axis::Z).unwrap()),
                (0.3, PauliString::from_axes(3, &[(1, Axis::X), (2, Axis::X)]).unwrap()),
            ],
        )
        .unwrap();
        let cfg = BackendConfig { krylov_dim: 3, shots_per_circuit: 40, ..BackendConfig::default() };
        let a = build_pool(&h, &cfg, &mut stream(9, StreamDomain::TrainPool, 1, 5), 5).unwrap();
        let b = build_pool(&h, &cfg, &mut stream(9, StreamDomain::TrainPool, 1, 5), 5).unwrap();
        assert_eq!(a.bitstrings(), b.bitstrings());
    }
}
