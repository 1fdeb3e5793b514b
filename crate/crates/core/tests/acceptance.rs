//! Acceptance gate: one test per criterion, each emitting a single
//! pass/fail line. `cargo test --test acceptance` must pass in full.

use std::process::Command;

use hamlearn::verify::{suite_gradients, suite_sampling, suite_trotter, suite_variational, VerifyOptions};
use hamlearn::{
    evaluate, fit_with_options, generate_adjacent_pattern, generate_synthetic, split, standardize,
    BackendConfig, FitOptions, Hyperparameters, LabeledDataset, ModelParameters, StopCondition,
    SyntheticSpec,
};

fn report(criterion: &str, passed: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn default_task() -> (LabeledDataset, LabeledDataset) {
    let dataset = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let (train, val) = split(&dataset, 0.8, 0).unwrap();
    let (train, val, _) = standardize(&train, &val).unwrap();
    (train, val)
}

fn algorithm_hyperparameters(seed: u64) -> Hyperparameters {
    Hyperparameters {
        n_qubits: 10,
        batch_size: 25,
        epochs: 30,
        learning_rate: 0.1,
        lr_decay_factor: 0.8,
        lr_decay_every_epochs: 5,
        backend: BackendConfig {
            krylov_dim: 8,
            shots_per_circuit: 200,
            dt: 0.05,
            ..BackendConfig::default()
        },
        energy_terms: 2,
        seed,
        ..Hyperparameters::default()
    }
}

#[test]
fn criterion_1_end_to_end_training() {
    let (train, val) = default_task();
    let seeds = [1u64, 2, 3, 4, 5];
    let mut successes = 0usize;
    let mut details = Vec::new();
    for &seed in &seeds {
        let hp = algorithm_hyperparameters(seed);

        // loss at initialization, before any update
        let pattern = generate_adjacent_pattern(hp.n_qubits, &hp.axes).unwrap();
        let mut init_rng = hamlearn::rng::stream(seed, hamlearn::rng::StreamDomain::Init, 0, 0);
        let init = ModelParameters::random_init(
            pattern,
            train.num_features(),
            train.num_classes(),
            hamlearn::train::INIT_SCALE,
            &mut init_rng,
        )
        .unwrap();
        let (init_loss, _, _) =
            evaluate(&init, &val, &hp.backend, hp.energy_terms, seed, 0).unwrap();

        let opts = FitOptions {
            stop_when: Some(StopCondition { val_loss_at_most: 0.45, val_accuracy_at_least: 0.85 }),
            ..FitOptions::default()
        };
        let result = fit_with_options(&train, &val, &hp, &opts).unwrap();
        let best_loss = result.metrics.iter().map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
        let best_acc = result.metrics.iter().map(|r| r.val_accuracy).fold(0.0, f64::max);

        let ok = (init_loss - 0.69).abs() <= 0.05 && best_loss <= 0.45 && best_acc >= 0.85;
        if ok {
            successes += 1;
        }
        details.push(format!(
            "seed {seed}: init {init_loss:.3}, best loss {best_loss:.3}, best acc {best_acc:.3}, epochs {}",
            result.metrics.len()
        ));
    }
    report(
        "1 (end-to-end training, n=10)",
        successes >= 4,
        &format!("{successes}/5 seeds met init 0.69±0.05, loss ≤ 0.45, acc ≥ 0.85 [{}]", details.join("; ")),
    );
}

#[test]
fn criterion_2_gradient_oracle() {
    let report_data = suite_gradients(&VerifyOptions { qubits: None, seeds: 20 }).unwrap();
    report("2 (gradient oracle, n=3..5)", report_data.passed, &report_data.detail);
}

#[test]
fn criterion_3_variational_and_monotonicity() {
    let report_data = suite_variational(&VerifyOptions { qubits: Some(8), seeds: 50 }).unwrap();
    report("3 (variational/monotonicity)", report_data.passed, &report_data.detail);
}

#[test]
fn criterion_4_trotter_order() {
    let report_data = suite_trotter(&VerifyOptions { qubits: Some(6), seeds: 10 }).unwrap();
    report("4 (trotter first order)", report_data.passed, &report_data.detail);
}

#[test]
fn criterion_5_energy_term_study() {
    let (train, val) = default_task();
    let mut accs = Vec::new();
    for m in [2usize, 16] {
        let hp = Hyperparameters {
            epochs: 1,
            energy_terms: m,
            ..algorithm_hyperparameters(1)
        };
        let result = fit_with_options(&train, &val, &hp, &FitOptions::default()).unwrap();
        accs.push(result.metrics[0].val_accuracy);
    }
    let diff_pp = (accs[0] - accs[1]).abs() * 100.0;
    report(
        "5 (M=2 vs M=16)",
        diff_pp <= 3.0,
        &format!("val accuracy {:.3} vs {:.3}, difference {diff_pp:.2} pp (tol 3)", accs[0], accs[1]),
    );
}

#[test]
fn criterion_6_worker_determinism() {
    let bin = env!("CARGO_BIN_EXE_hamlearn");
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "[data.synthetic]\npoints = 80\nfeatures = 8\ninformative = 4\n\n\
         [training]\nn_qubits = 8\nepochs = 2\nseed = 5\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for workers in [1usize, 4] {
        let dir = tmp.path().join(format!("w{workers}"));
        let status = Command::new(bin)
            .args([
                "train",
                "--config",
                config.to_str().unwrap(),
                "--out",
                dir.to_str().unwrap(),
                "--workers",
                &workers.to_string(),
            ])
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "train --workers {workers} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        outputs.push(std::fs::read(dir.join("metrics.jsonl")).unwrap());
    }
    report(
        "6 (worker determinism)",
        outputs[0] == outputs[1],
        &format!(
            "metrics files byte-identical across --workers 1 and 4 ({} bytes)",
            outputs[0].len()
        ),
    );
}

#[test]
fn criterion_7_sampling_correctness() {
    let report_data = suite_sampling(&VerifyOptions::default()).unwrap();
    report("7 (sampling TVD)", report_data.passed, &report_data.detail);
}
