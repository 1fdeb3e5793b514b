//! Command-line front end: gen-data | train | eval | verify.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 runtime/numerical error.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::data::{generate_synthetic, load_csv, split, standardize, write_csv, SyntheticSpec};
use crate::error::{Error, Result};
use crate::model::ModelFile;
use crate::pool::BitstringPool;
use crate::train::{evaluate_with_pool, fit_with_options, predicted_class, FitOptions};
use crate::verify::{run_all, run_suite, VerifyOptions, SUITES};

#[derive(Parser)]
#[command(
    name = "hamlearn",
    about = "Supervised learning with linear Pauli Hamiltonians on a simulated sampling backend",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic classification dataset as CSV
    GenData(GenDataArgs),
    /// Train a model; writes a self-describing run directory
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset
    Eval(EvalArgs),
    /// Run the verification suites against dense oracles
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Number of datapoints [default: 500]
    #[arg(long)]
    points: Option<usize>,
    /// Number of features [default: 10]
    #[arg(long)]
    features: Option<usize>,
    /// Number of informative features [default: 5]
    #[arg(long)]
    informative: Option<usize>,
    /// Number of classes [default: 2]
    #[arg(long)]
    classes: Option<usize>,
    /// Cluster separation [default: 1.5]
    #[arg(long)]
    class_sep: Option<f64>,
    /// Label flip probability [default: 0.01]
    #[arg(long)]
    label_noise: Option<f64>,
    /// Generator seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// TOML run configuration; defaults apply for every omitted key
    #[arg(long)]
    config: Option<PathBuf>,
    /// Train on an existing CSV file
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Train on the synthetic generator (the default source)
    #[arg(long)]
    synthetic: bool,
    /// Run directory; overrides run_name in the config
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    qubits: Option<u32>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Excited states M in the gradient sum
    #[arg(long)]
    energy_terms: Option<usize>,
    /// Worker threads inside fit; must not affect outputs [default: machine parallelism]
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Saved model JSON
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV to evaluate on
    #[arg(long)]
    data: PathBuf,
    /// Label column name [default: label]
    #[arg(long)]
    label_column: Option<String>,
    /// Bitstring pool dump to reuse; omitted = sample fresh per-point pools
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Per-point prediction file [default: predictions.csv]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Excited states M in the ground-state solve [default: 2]
    #[arg(long)]
    energy_terms: Option<usize>,
    /// Seed for fresh pool sampling [default: 0]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run: gradients | variational | trotter | sampling [default: all]
    #[arg(long)]
    suite: Option<String>,
    /// Qubit count override
    #[arg(long)]
    qubits: Option<u32>,
    /// Random draws per suite [default: 20]
    #[arg(long)]
    seeds: Option<usize>,
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, anything else is usage
            let code = if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::GenData(a) => cmd_gen_data(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn cmd_gen_data(a: GenDataArgs) -> Result<ExitCode> {
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        points: a.points.unwrap_or(d.points),
        features: a.features.unwrap_or(d.features),
        informative: a
            .informative
            .unwrap_or_else(|| d.informative.min(a.features.unwrap_or(d.features))),
        classes: a.classes.unwrap_or(d.classes),
        class_sep: a.class_sep.unwrap_or(d.class_sep),
        label_noise: a.label_noise.unwrap_or(d.label_noise),
        seed: a.seed.unwrap_or(d.seed),
    };
    spec.validate()?;
    let ds = generate_synthetic(&spec)?;
    write_csv(&ds, &a.out, "label")?;
    println!(
        "wrote {}: points={} features={} classes={} class_counts={:?}",
        a.out.display(),
        ds.len(),
        ds.num_features(),
        ds.num_classes(),
        ds.class_counts()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(a: TrainArgs) -> Result<ExitCode> {
    let mut cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(data) = &a.data {
        cfg.data.csv = Some(data.clone());
    }
    if a.synthetic {
        cfg.data.csv = None;
    }
    if let Some(e) = a.epochs {
        cfg.training.epochs = e;
    }
    if let Some(s) = a.seed {
        cfg.training.seed = s;
    }
    if let Some(q) = a.qubits {
        cfg.training.n_qubits = q;
    }
    if let Some(b) = a.batch_size {
        cfg.training.batch_size = b;
    }
    if let Some(lr) = a.learning_rate {
        cfg.training.learning_rate = lr;
    }
    if let Some(m) = a.energy_terms {
        cfg.training.energy_terms = m;
    }
    cfg.validate()?;

    let run_dir = match &a.out {
        Some(dir) => dir.clone(),
        None => cfg.run_dir(None),
    };
    fs::create_dir_all(&run_dir)
        .map_err(|e| Error::Config(format!("cannot create run dir {}: {e}", run_dir.display())))?;
    fs::write(run_dir.join("resolved-config.toml"), cfg.to_toml()?)?;

    let dataset = match &cfg.data.csv {
        Some(path) => load_csv(path, &cfg.data.label_column)?,
        None => generate_synthetic(&cfg.data.synthetic)?,
    };
    let (train, val) = split(&dataset, cfg.data.train_fraction, cfg.data.split_seed)?;
    let (train, val) = if cfg.data.standardize {
        let (t, v, _) = standardize(&train, &val)?;
        (t, v)
    } else {
        (train, val)
    };
    // persist the exact splits seen by the optimizer for later replay
    write_csv(&train, &run_dir.join("train.csv"), "label")?;
    write_csv(&val, &run_dir.join("val.csv"), "label")?;

    let checkpoints = run_dir.join("checkpoints");
    fs::create_dir_all(&checkpoints)?;
    let opts = FitOptions { workers: a.workers, checkpoint_dir: Some(checkpoints), stop_when: None };
    let result = fit_with_options(&train, &val, &cfg.training, &opts)?;

    let mut metrics = fs::File::create(run_dir.join("metrics.jsonl"))?;
    for row in &result.metrics {
        let line = serde_json::to_string(row).map_err(|e| Error::Config(format!("serialize metrics: {e}")))?;
        writeln!(metrics, "{line}")?;
    }

    let model = ModelFile::from_params(&result.params, cfg.training.seed);
    model.save(&run_dir.join("model.json"))?;

    let mut summary = serde_json::json!({
        "epochs": result.metrics.len(),
        "final_train_loss": serde_json::Value::Null,
        "final_val_loss": result.metrics.last().map(|r| r.val_loss),
        "final_val_accuracy": result.metrics.last().map(|r| r.val_accuracy),
    });
    if let Some(pool) = &result.final_pool {
        let f = fs::File::create(run_dir.join("pool.txt"))?;
        pool.write_dump(
            std::io::BufWriter::new(f),
            cfg.training.backend.krylov_dim,
            cfg.training.backend.dt,
            cfg.training.backend.shots_per_circuit,
            cfg.training.seed,
        )?;
        // one clean post-training pass; eval --pool replays this number
        let (loss, _, _) =
            evaluate_with_pool(&result.params, &train, pool, cfg.training.energy_terms)?;
        summary["final_train_loss"] = serde_json::json!(loss);
    }
    fs::write(
        run_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Config(format!("serialize summary: {e}")))?
            + "\n",
    )?;

    for row in &result.metrics {
        println!(
            "epoch {:3}  train_loss {:.4}  val_loss {:.4}  val_acc {:.3}  lr {:.4}",
            row.epoch, row.train_loss, row.val_loss, row.val_accuracy, row.learning_rate_in_effect
        );
    }
    println!("run directory: {}", run_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(a: EvalArgs) -> Result<ExitCode> {
    if !a.model.exists() {
        return Err(Error::InvalidArgument(format!(
            "model file not found: {}",
            a.model.display()
        )));
    }
    let model = ModelFile::load(&a.model)?;
    let params = model.to_params()?;
    let label_column = a.label_column.as_deref().unwrap_or("label");
    let dataset = load_csv(&a.data, label_column)?;
    let energy_terms = a.energy_terms.unwrap_or(2);

    let (loss, accuracy, logit_rows) = match &a.pool {
        Some(path) => {
            let f = fs::File::open(path)
                .map_err(|e| Error::InvalidArgument(format!("pool dump {}: {e}", path.display())))?;
            let pool = Arc::new(BitstringPool::read_dump(std::io::BufReader::new(f))?);
            evaluate_with_pool(&params, &dataset, &pool, energy_terms)?
        }
        None => crate::train::evaluate(
            &params,
            &dataset,
            &crate::backend::BackendConfig::default(),
            energy_terms,
            a.seed.unwrap_or(0),
            0,
        )?,
    };

    let out = a.out.unwrap_or_else(|| PathBuf::from("predictions.csv"));
    let mut w = fs::File::create(&out)?;
    let logit_cols: Vec<String> = (0..dataset.num_classes()).map(|k| format!("logit{k}")).collect();
    writeln!(w, "index,true_class,predicted_class,{}", logit_cols.join(","))?;
    for (i, (point, logits)) in dataset.points().iter().zip(&logit_rows).enumerate() {
        let cols: Vec<String> = logits.iter().map(|l| format!("{l}")).collect();
        writeln!(w, "{i},{},{},{}", point.class(), predicted_class(logits), cols.join(","))?;
    }

    println!("loss {loss:.17} accuracy {accuracy:.4}");
    println!("predictions: {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let mut opts = VerifyOptions::default();
    opts.qubits = a.qubits;
    if let Some(s) = a.seeds {
        opts.seeds = s;
    }
    let reports = match &a.suite {
        Some(name) if !SUITES.contains(&name.as_str()) => {
            return Err(Error::InvalidArgument(format!(
                "unknown suite '{name}'; available suites: {}",
                SUITES.join(", ")
            )));
        }
        Some(name) => vec![run_suite(name, &opts)?],
        None => run_all(&opts)?,
    };
    let mut all_passed = true;
    for r in &reports {
        println!("{}: {} — {}", r.suite, if r.passed { "PASS" } else { "FAIL" }, r.detail);
        all_passed &= r.passed;
    }
    if all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Error::Numerical("one or more verification suites failed".into()))
    }
}

