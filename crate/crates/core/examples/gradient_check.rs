//! Truncated perturbation-theory gradients vs central finite differences.
//!
//! With a full-basis pool and every excited state kept, the truncated
//! gradient is the exact derivative of the loss.

use std::sync::Arc;

use hamlearn::{
    datapoint_gradients, diagonalize, generate_adjacent_pattern, logits, softmax_cross_entropy,
    transition_elements, Axis, BitstringPool, DataPoint, ModelParameters,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn loss_of(
    params: &ModelParameters,
    x: &DataPoint,
    pool: &Arc<BitstringPool>,
    m: usize,
) -> hamlearn::Result<f64> {
    let h = params.assemble_hamiltonian(x)?;
    let spec = diagonalize(&h, pool, m)?;
    let l = logits(params, spec.ground_vector(), pool)?;
    Ok(softmax_cross_entropy(&l, x.label())?.0)
}

fn main() -> hamlearn::Result<()> {
    let n = 4u32;
    let pattern = generate_adjacent_pattern(n, &[Axis::X, Axis::Z])?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params = ModelParameters::random_init(pattern, 2, 2, 0.3, &mut rng)?;
    let x = DataPoint::from_class(vec![0.8, -0.3], 1, 2)?;

    let pool = Arc::new(BitstringPool::full_basis(n)?);
    let m = (1usize << n) - 1;
    let h = params.assemble_hamiltonian(&x)?;
    let spec = diagonalize(&h, &pool, m)?;
    let table = transition_elements(&spec, params.pattern())?;
    let grads = datapoint_gradients(&params, &x, &spec, &table)?;

    let step = 1e-4;
    println!("loss = {:.6}; analytic vs finite-difference, first 5 beta components:", grads.loss);
    for p in 0..5 {
        let mut plus = params.clone();
        plus.beta_mut()[p] += step;
        let mut minus = params.clone();
        minus.beta_mut()[p] -= step;
        let fd = (loss_of(&plus, &x, &pool, m)? - loss_of(&minus, &x, &pool, m)?) / (2.0 * step);
        println!(
            "  d/d_beta[{p}]: analytic {:+.8}  fd {:+.8}  diff {:.2e}",
            grads.g_beta[p],
            fd,
            (grads.g_beta[p] - fd).abs()
        );
    }

    // chi gradients are tied to beta by the feature value
    let f = 0;
    println!("chi/beta proportionality (feature value {}):", x.features()[f]);
    for p in 0..3 {
        println!(
            "  g_chi[{f}][{p}] = {:+.8} = -a^{f} * g_beta[{p}] = {:+.8}",
            grads.g_chi[f][p],
            -x.features()[f] * grads.g_beta[p]
        );
    }
    Ok(())
}
