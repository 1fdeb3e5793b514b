//! Exact vs first-order Trotter evolution: the state error shrinks
//! linearly with the substep size.

use hamlearn::backend::{evolve, evolve_trotter, prepare_reference, Reference};
use hamlearn::{generate_adjacent_pattern, Axis, BackendConfig, PauliOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hamlearn::Result<()> {
    let n = 6;
    let pattern = generate_adjacent_pattern(n, &[Axis::X, Axis::Z])?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = PauliOperator::from_terms(
        n,
        pattern.strings().iter().map(|&s| (rng.gen_range(-1.0..=1.0), s)),
    )?;

    let psi0 = prepare_reference(n, Reference::PlusState)?;
    let t = 0.4;
    let exact = evolve(&h, &psi0, t, &BackendConfig::default())?;

    println!("total time {t}, exact vs Trotter state error:");
    for doubling in 0..5 {
        let substeps = 4usize << doubling;
        let approx = evolve_trotter(&h, &psi0, t, substeps)?;
        let err: f64 = approx
            .amplitudes()
            .iter()
            .zip(exact.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        println!("  substeps {substeps:3}: error {err:.3e}");
    }
    Ok(())
}
