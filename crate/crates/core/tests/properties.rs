//! Property-based checks of the Pauli algebra and pool round trips against
//! an independent dense Kronecker-product oracle.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use hamlearn::verify::kron_string;
use hamlearn::{generate_adjacent_pattern, Axis, BitstringPool, PauliOperator, PauliString, Statevector};

fn arb_axes() -> impl Strategy<Value = Vec<Axis>> {
    prop::sample::subsequence(vec![Axis::X, Axis::Y, Axis::Z], 1..=3)
}

proptest! {
    /// Every Pauli string squares to the identity.
    #[test]
    fn pauli_involution(n in 1u32..=5, seed in any::<u64>()) {
        let x = seed & ((1 << n) - 1);
        let z = (seed >> 32) & ((1 << n) - 1);
        let p = PauliString::new(n, x, z).unwrap();
        let dense = kron_string(&p);
        let prod = &dense * &dense;
        let eye = DMatrix::<Complex64>::identity(1 << n, 1 << n);
        prop_assert!((prod - eye).norm() < 1e-12);
    }

    /// The adjacent pattern has |axes|·n single-site terms plus
    /// |axes|²·(n−1) nearest-neighbour pairs, all distinct.
    #[test]
    fn pattern_size_formula(n in 2u32..=8, axes in arb_axes()) {
        let pattern = generate_adjacent_pattern(n, &axes).unwrap();
        let a = axes.len();
        prop_assert_eq!(pattern.len(), a * n as usize + a * a * (n as usize - 1));
        let mut seen = std::collections::HashSet::new();
        for s in pattern.strings() {
            prop_assert!(seen.insert((s.x_mask(), s.z_mask())), "duplicate string in pattern");
        }
    }

    /// Sparse operator application agrees with the dense Kronecker matrix.
    #[test]
    fn apply_matches_kronecker(n in 1u32..=4, seed in any::<u64>()) {
        let x = seed & ((1 << n) - 1);
        let z = (seed >> 17) & ((1 << n) - 1);
        let p = PauliString::new(n, x, z).unwrap();
        let op = PauliOperator::from_terms(n, [(1.0, p)]).unwrap();

        let dim = 1usize << n;
        let mut amps: Vec<Complex64> = (0..dim)
            .map(|i| {
                let h = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64 * 0x1234_5677);
                Complex64::new((h % 997) as f64 / 997.0 - 0.5, (h % 613) as f64 / 613.0 - 0.5)
            })
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-6);
        for a in &mut amps {
            *a /= norm;
        }
        let state = Statevector::from_amplitudes(n, amps.clone()).unwrap();
        let applied = op.apply_to_state(&state).unwrap();

        let expected = kron_string(&p) * DVector::from_vec(amps);
        for i in 0..dim {
            prop_assert!((applied.amplitudes()[i] - expected[i]).norm() < 1e-12);
        }
    }

    /// A pool dump parses back to the identical pool.
    #[test]
    fn pool_dump_round_trip(n in 1u32..=8, raw in prop::collection::vec(any::<u64>(), 1..40)) {
        let bits: Vec<u64> = raw.into_iter().map(|b| b & ((1 << n) - 1)).collect();
        let pool = BitstringPool::from_bitstrings(n, bits).unwrap();
        let mut dump = Vec::new();
        pool.write_dump(&mut dump, 8, 0.05, 200, 7).unwrap();
        let parsed = BitstringPool::read_dump(&dump[..]).unwrap();
        prop_assert_eq!(parsed.num_qubits(), pool.num_qubits());
        prop_assert_eq!(parsed.bitstrings(), pool.bitstrings());
    }
}
