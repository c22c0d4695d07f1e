//! `uqnn`: generate datasets, train unitary models, synthesize and verify.

mod config;
mod summary;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use uqnn::dataset::{generate, Dataset, DEFAULT_COUNT, DEFAULT_TEST_FRACTION};
use uqnn::linalg::StateVector;
use uqnn::qsim::{benchmark_circuit, BenchmarkId, Circuit, DEFAULT_CIRCUIT_SEED};
use uqnn::synth::{synthesize, to_qasm};
use uqnn::trainer::{
    accuracy, fit, forward, loss_mse, metrics_to_csv, r2_score, target_fidelity, UnitaryModel,
};

use config::{FileConfig, Init, Overrides};
use summary::Summary;

/// Fresh-sample seed for `verify`, kept apart from typical training seeds.
const VERIFY_SEED: u64 = 0x5eed_0f7e_57a7;

#[derive(Parser)]
#[command(name = "uqnn", version, about = "Train unitary networks on circuit data and synthesize them back into gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample random input states, push them through a circuit, save the pairs.
    Gen(GenArgs),
    /// Fit a unitary model to a dataset.
    Train(TrainArgs),
    /// Decompose a trained model into elementary gates.
    Synth(SynthArgs),
    /// Compare a model with a reference circuit on fresh states.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    /// One of random4q17, bell2q, adder4q, adder5q.
    #[arg(long)]
    benchmark: Option<BenchmarkId>,
    /// Circuit text file.
    #[arg(long)]
    circuit: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct OptionalTarget {
    #[arg(long)]
    benchmark: Option<BenchmarkId>,
    #[arg(long)]
    circuit: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    target: Target,
    /// Seed for the random benchmark circuit.
    #[arg(long, default_value_t = DEFAULT_CIRCUIT_SEED)]
    circuit_seed: u64,
    #[arg(long, default_value_t = DEFAULT_COUNT)]
    count: usize,
    /// Falls back to UQNN_SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    test_fraction: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// TOML file with training parameters; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Gradient updates between projections.
    #[arg(long)]
    mapping_step: Option<usize>,
    /// Falls back to the config file, then UQNN_SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    init: Option<Init>,
    /// Stop once the test MSE is below this.
    #[arg(long)]
    early_stop: Option<f64>,
    #[arg(long)]
    accuracy_threshold: Option<f64>,
    /// Plain gradient descent without mapping back to unitaries.
    #[arg(long)]
    no_projection: bool,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    metrics_out: PathBuf,
    /// Reference circuit for reporting target fidelity.
    #[command(flatten)]
    target: OptionalTarget,
    #[arg(long, default_value_t = DEFAULT_CIRCUIT_SEED)]
    circuit_seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    model: PathBuf,
    /// Circuit text output.
    #[arg(long)]
    out: PathBuf,
    /// QASM output; defaults to the circuit path with a .qasm extension.
    #[arg(long)]
    qasm: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    target: Target,
    #[arg(long, default_value_t = DEFAULT_CIRCUIT_SEED)]
    circuit_seed: u64,
    /// Number of fresh input states.
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = VERIFY_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.99)]
    accuracy_threshold: f64,
}

fn load_target(
    benchmark: Option<BenchmarkId>,
    circuit: Option<&Path>,
    circuit_seed: u64,
) -> Result<Option<(String, Circuit)>> {
    match (benchmark, circuit) {
        (Some(id), _) => Ok(Some((id.label().to_string(), benchmark_circuit(id, circuit_seed)))),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading circuit {}", path.display()))?;
            let c = Circuit::from_text(&text)
                .with_context(|| format!("parsing circuit {}", path.display()))?;
            let label = if c.name().is_empty() {
                path.display().to_string()
            } else {
                c.name().to_string()
            };
            Ok(Some((label, c)))
        }
        (None, None) => Ok(None),
    }
}

fn require_target(t: &Target, circuit_seed: u64) -> Result<(String, Circuit)> {
    load_target(t.benchmark, t.circuit.as_deref(), circuit_seed)?
        .context("one of --benchmark or --circuit is required")
}

/// Fails early if `path` could not be created.
fn check_writable(path: &Path) -> Result<()> {
    if path.is_dir() {
        bail!("{} is a directory", path.display());
    }
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        bail!("cannot write {}: directory {} does not exist", path.display(), parent.display());
    }
    Ok(())
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_gen(args: GenArgs) -> Result<Summary> {
    check_writable(&args.out)?;
    let seed = match args.seed {
        Some(s) => s,
        None => config::env_seed()?,
    };
    let (label, circuit) = require_target(&args.target, args.circuit_seed)?;
    let ds = generate(&circuit, args.count, seed, args.test_fraction)?;
    ds.save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let mut s = Summary::new("gen");
    s.push("circuit", label)
        .push("num_qubits", ds.num_qubits)
        .push("count", ds.samples.len())
        .push("train", ds.train_indices.len())
        .push("test", ds.test_indices.len())
        .push("seed", seed)
        .push("out", args.out.display());
    Ok(s)
}

fn cmd_train(args: TrainArgs) -> Result<Summary> {
    check_writable(&args.model_out)?;
    check_writable(&args.metrics_out)?;
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        learning_rate: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        mapping_step: args.mapping_step,
        seed: args.seed,
        init: args.init,
        early_stop_mse: args.early_stop,
        accuracy_threshold: args.accuracy_threshold,
        no_projection: args.no_projection,
    };
    let config = config::resolve(&flags, &file)?;
    let target = load_target(args.target.benchmark, args.target.circuit.as_deref(), args.circuit_seed)?;
    let ds = Dataset::load(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    if let Some((_, c)) = &target {
        if c.num_qubits() != ds.num_qubits {
            bail!(
                "dimension mismatch: dataset has {} qubits, reference circuit has {}",
                ds.num_qubits,
                c.num_qubits()
            );
        }
    }

    let mut report = fit(&ds, &config)?;
    let fidelity = match &target {
        Some((_, c)) => Some(report.evaluate_target(&c.unitary()?)?),
        None => None,
    };
    report
        .final_model
        .save(&args.model_out)
        .with_context(|| format!("writing {}", args.model_out.display()))?;
    write_file(&args.metrics_out, metrics_to_csv(&report.trace))?;

    let last = report.last();
    let mut s = Summary::new("train");
    s.push("num_qubits", ds.num_qubits)
        .push("epochs", last.epoch)
        .push("updates", report.updates)
        .push("projections", report.projections)
        .push_f64("train_mse", last.train_mse)
        .push_f64("test_mse", last.test_mse)
        .push_f64("test_r2", last.test_r2)
        .push_f64("test_accuracy", last.test_accuracy)
        .push_f64("unitarity_err", last.unitarity_err)
        .push_opt("target", target.as_ref().map(|(l, _)| l.as_str()))
        .push_opt("target_fidelity", fidelity)
        .push("seed", config.seed)
        .push("model", args.model_out.display())
        .push("metrics", args.metrics_out.display());
    Ok(s)
}

fn cmd_synth(args: SynthArgs) -> Result<Summary> {
    let qasm_path = args.qasm.clone().unwrap_or_else(|| args.out.with_extension("qasm"));
    check_writable(&args.out)?;
    check_writable(&qasm_path)?;
    let model = UnitaryModel::load(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let synth = synthesize(model.weights()).context("synthesis failed")?;
    write_file(&args.out, synth.circuit.to_text())?;
    write_file(&qasm_path, to_qasm(&synth.circuit, synth.global_phase))?;
    let mut s = Summary::new("synth");
    s.push("num_qubits", model.num_qubits())
        .push("gate_count", synth.gate_count)
        .push("depth", synth.circuit.depth())
        .push("two_level_count", synth.two_level_count)
        .push_f64("global_phase", synth.global_phase)
        .push_f64("reconstruction_error", synth.reconstruction_error)
        .push("out", args.out.display())
        .push("qasm", qasm_path.display());
    Ok(s)
}

fn cmd_verify(args: VerifyArgs) -> Result<Summary> {
    let model = UnitaryModel::load(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let (label, circuit) = require_target(&args.target, args.circuit_seed)?;
    if circuit.num_qubits() != model.num_qubits() {
        bail!(
            "dimension mismatch: model has {} qubits, circuit `{label}` has {}",
            model.num_qubits(),
            circuit.num_qubits()
        );
    }
    let fidelity = target_fidelity(&model, &circuit.unitary()?)?;
    let fresh = generate(&circuit, args.count, args.seed, 0.5)?;
    let preds = fresh
        .samples
        .iter()
        .map(|s| forward(&model, &s.input))
        .collect::<uqnn::Result<Vec<StateVector>>>()?;
    let targets: Vec<StateVector> = fresh.samples.iter().map(|s| s.output.clone()).collect();
    let mse = preds
        .iter()
        .zip(&targets)
        .map(|(p, t)| loss_mse(p, t))
        .sum::<uqnn::Result<f64>>()?
        / preds.len() as f64;
    let mut s = Summary::new("verify");
    s.push("target", label)
        .push("num_qubits", model.num_qubits())
        .push_f64("target_fidelity", fidelity)
        .push_f64("test_mse", mse)
        .push_f64("test_r2", r2_score(&preds, &targets)?)
        .push_f64("test_accuracy", accuracy(&preds, &targets, args.accuracy_threshold)?)
        .push("samples", preds.len())
        .push("seed", args.seed);
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(mut summary) => {
            summary.push("elapsed_s", format!("{:.3}", start.elapsed().as_secs_f64()));
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
