//! End-to-end training on a synthetic dataset through the library API.

use hamlearn::{
    fit, generate_synthetic, split, standardize, BackendConfig, Hyperparameters, SyntheticSpec,
};

fn main() -> hamlearn::Result<()> {
    let spec = SyntheticSpec { points: 120, features: 6, informative: 4, seed: 3, ..SyntheticSpec::default() };
    let dataset = generate_synthetic(&spec)?;
    let (train, val) = split(&dataset, 0.8, 3)?;
    let (train, val, _) = standardize(&train, &val)?;

    let hp = Hyperparameters {
        n_qubits: 6,
        epochs: 5,
        batch_size: 24,
        backend: BackendConfig { krylov_dim: 4, ..BackendConfig::default() },
        seed: 3,
        ..Hyperparameters::default()
    };
    let result = fit(&train, &val, &hp)?;

    for row in &result.metrics {
        println!(
            "epoch {}  train_loss {:.4}  val_loss {:.4}  val_acc {:.3}  pool {:.0}",
            row.epoch, row.train_loss, row.val_loss, row.val_accuracy, row.mean_pool_size
        );
    }
    println!(
        "trained {} coefficients over {} Pauli strings",
        result.params.pattern().len() * (2 + train.num_features() + train.num_classes()),
        result.params.pattern().len()
    );
    Ok(())
}
