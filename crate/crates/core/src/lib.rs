//! Supervised learning with linear Pauli Hamiltonians.
//!
//! Classical feature vectors are encoded as adjacent 2-local Hamiltonians
//! H(x) = B - sum_f a^f X_f, ground states are approximated by sample-based
//! Krylov diagonalization on a simulated sampling backend, and the model
//! operators are trained with truncated perturbation-theory gradients.
//!
//! Start with the `examples/` directory: each example exercises one
//! capability end to end.

pub mod backend;
pub mod cli;
pub mod config;
pub mod data;
pub mod eigen;
pub mod error;
pub mod gradient;
pub mod krylov;
pub mod model;
pub mod pauli;
pub mod pool;
pub mod rng;
pub mod spectral;
pub mod train;
pub mod verify;

pub use backend::{build_pool, BackendConfig, EvolutionMode, Reference};
pub use data::{generate_synthetic, load_csv, split, standardize, write_csv, LabeledDataset, SyntheticSpec};
pub use error::{Error, Result};
pub use gradient::{datapoint_gradients, DatapointGradients};
pub use model::{
    generate_adjacent_pattern, logits, softmax_cross_entropy, Axis, DataPoint, ModelFile,
    ModelParameters, PauliPattern,
};
pub use pauli::{PauliOperator, PauliString, Phase, Statevector};
pub use pool::{BitstringPool, PoolOrigin};
pub use spectral::{diagonalize, transition_elements, SpectralResult, TransitionTable};
pub use train::{
    evaluate, fit, fit_with_options, EpochMetrics, FitOptions, FitResult, Hyperparameters, StopCondition,
    ResamplingStrategy, SamplingStrategy,
};
