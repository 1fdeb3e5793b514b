//! Sample-based Krylov diagonalization: build a bitstring pool from
//! time-evolved circuit samples, solve the projected problem, and compare
//! against the exact ground energy.

use std::sync::Arc;

use hamlearn::rng::{stream, StreamDomain};
use hamlearn::verify::dense_ground_energy;
use hamlearn::{
    build_pool, diagonalize, generate_adjacent_pattern, Axis, BackendConfig, PauliOperator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hamlearn::Result<()> {
    let n = 8;
    let pattern = generate_adjacent_pattern(n, &[Axis::X, Axis::Z])?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = PauliOperator::from_terms(
        n,
        pattern.strings().iter().map(|&s| (rng.gen_range(-1.0..=1.0), s)),
    )?;
    let exact = dense_ground_energy(&h)?;
    println!("exact ground energy: {exact:.8}");

    for krylov_dim in [1usize, 2, 4, 8] {
        let cfg = BackendConfig { krylov_dim, ..BackendConfig::default() };
        let mut pool_rng = stream(0, StreamDomain::TrainPool, 0, krylov_dim as u64);
        let pool = Arc::new(build_pool(&h, &cfg, &mut pool_rng, 0)?);
        let spec = diagonalize(&h, &pool, 2)?;
        println!(
            "  krylov_dim {krylov_dim}: pool size {:4}, subspace E0 {:.8} (gap to exact {:.2e})",
            pool.len(),
            spec.ground_energy(),
            spec.ground_energy() - exact
        );
    }
    Ok(())
}
