//! Comparing pool sampling and resampling strategies on the same task.

use hamlearn::{
    fit, generate_synthetic, split, standardize, BackendConfig, Hyperparameters,
    ResamplingStrategy, SamplingStrategy, SyntheticSpec,
};

fn main() -> hamlearn::Result<()> {
    let spec = SyntheticSpec { points: 100, features: 7, informative: 4, seed: 6, ..SyntheticSpec::default() };
    let dataset = generate_synthetic(&spec)?;
    let (train, val) = split(&dataset, 0.8, 6)?;
    let (train, val, _) = standardize(&train, &val)?;

    let combos = [
        (SamplingStrategy::BatchUnion, ResamplingStrategy::EachEpoch),
        (SamplingStrategy::BatchUnion, ResamplingStrategy::GreedyEpoch),
        (SamplingStrategy::LastPool, ResamplingStrategy::EachEpoch),
        (SamplingStrategy::LastPool, ResamplingStrategy::GreedyEpoch),
    ];
    for (sampling, resampling) in combos {
        let hp = Hyperparameters {
            n_qubits: 7,
            epochs: 4,
            batch_size: 20,
            backend: BackendConfig { krylov_dim: 2, shots_per_circuit: 25, ..BackendConfig::default() },
            sampling_strategy: sampling,
            resampling_strategy: resampling,
            seed: 6,
            ..Hyperparameters::default()
        };
        let result = fit(&train, &val, &hp)?;
        let last = result.metrics.last().unwrap();
        println!(
            "{sampling:?} + {resampling:?}: final val_loss {:.4} val_acc {:.3} mean pool {:.1}",
            last.val_loss, last.val_accuracy, last.mean_pool_size
        );
    }
    Ok(())
}
