//! `retest`: evaluate prediction records for test-retest repeatability,
//! compare two reports, sweep the number of MC samples, or run the simulated
//! experiment end to end.
//!
//! Every option can also be set through an environment variable with the
//! `RETEST_` prefix, e.g. `RETEST_SEED=7`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use retest_core::evaluation::{write_evaluation, EvaluationConfig, DEFAULT_N_MC};
use retest_core::metrics::DEFAULT_BINS;
use retest_core::records::{load_labels, load_records, RecordFormat};
use retest_core::report::{read_json, write_json};
use retest_core::simlab::sweep::write_sweep_csv;
use retest_core::simlab::{manifest_hash, mc_sweep, simulate, Architecture, ExperimentConfig, DEFAULT_SWEEP};
use retest_core::stats::DEFAULT_ITERATIONS;
use retest_core::{compare_reports, evaluate, Error, EvaluationReport, Inference, LabelSet, RecordSet, Result};

#[derive(Parser)]
#[command(name = "retest", version, about = "Test-retest repeatability analysis for MC dropout predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score records and write report.json, bland_altman.csv and calibration.csv.
    Evaluate(EvaluateArgs),
    /// Welch t-test between two reports' bootstrap distributions, per metric.
    Compare(CompareArgs),
    /// Repeatability and accuracy for each number of MC samples.
    Sweep(SweepArgs),
    /// Generate a cohort, train MC and conventional models, write all artifacts.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Inputs {
    /// Prediction records, `.csv` or `.json`.
    #[arg(long, env = "RETEST_PREDICTIONS")]
    predictions: PathBuf,
    /// Per-image labels CSV.
    #[arg(long, env = "RETEST_LABELS")]
    labels: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// MC samples averaged per image.
    #[arg(long, env = "RETEST_N_MC", default_value_t = DEFAULT_N_MC)]
    n_mc: usize,
    /// Use the deterministic (`mc_index = -1`) rows instead of MC samples.
    #[arg(long, env = "RETEST_DETERMINISTIC")]
    deterministic: bool,
    #[arg(long, env = "RETEST_BOOTSTRAP_ITERS", default_value_t = DEFAULT_ITERATIONS)]
    bootstrap_iters: usize,
    /// Reliability-curve bins.
    #[arg(long, env = "RETEST_BINS", default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// First class counted as positive in calibration; defaults to k / 2.
    #[arg(long, env = "RETEST_POSITIVE_CLASS")]
    positive_class: Option<usize>,
    #[arg(long, env = "RETEST_SEED")]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "RETEST_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// First report (e.g. the MC model).
    report_a: PathBuf,
    /// Second report (e.g. the conventional model).
    report_b: PathBuf,
    /// Output JSON file.
    #[arg(long, env = "RETEST_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Comma-separated sample counts.
    #[arg(long, env = "RETEST_NS", value_delimiter = ',', default_values_t = DEFAULT_SWEEP)]
    ns: Vec<usize>,
    /// Output CSV file.
    #[arg(long, env = "RETEST_OUT")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Arch {
    /// Two hidden layers.
    Shallow,
    /// Four hidden layers.
    Deep,
}

#[derive(Args)]
struct SimulateArgs {
    /// Full experiment config as JSON (see config.json in any output); the
    /// flags below override its fields.
    #[arg(long, env = "RETEST_CONFIG")]
    config: Option<PathBuf>,
    /// Number of classes of the default cohort, ignored with --config.
    #[arg(long, env = "RETEST_K", default_value_t = 3)]
    k: usize,
    #[arg(long, env = "RETEST_ARCHITECTURE", value_enum)]
    architecture: Option<Arch>,
    #[arg(long, env = "RETEST_N_MC")]
    n_mc: Option<usize>,
    #[arg(long, env = "RETEST_BOOTSTRAP_ITERS")]
    bootstrap_iters: Option<usize>,
    #[arg(long, env = "RETEST_BINS")]
    bins: Option<usize>,
    /// Seeds model initialization, training, prediction and bootstrap.
    #[arg(long, env = "RETEST_SEED")]
    seed: u64,
    /// Seeds the synthetic cohort.
    #[arg(long, env = "RETEST_COHORT_SEED")]
    cohort_seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "RETEST_OUT")]
    out: PathBuf,
}

fn load_inputs(inputs: &Inputs) -> Result<(RecordSet, LabelSet)> {
    let p = &inputs.predictions;
    let records = load_records(p, RecordFormat::from_path(p)?)?;
    let labels = load_labels(&inputs.labels)?;
    Ok((records, labels))
}

fn print_paths(paths: &[PathBuf]) {
    paths.iter().for_each(|p| println!("{}", p.display()));
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let (records, labels) = load_inputs(&a.inputs)?;
    let inference = if a.deterministic {
        Inference::Deterministic
    } else {
        Inference::MonteCarlo(a.n_mc)
    };
    let cfg = EvaluationConfig {
        inference,
        bootstrap_iterations: a.bootstrap_iters,
        seed: a.seed,
        n_bins: a.bins,
        positive_boundary: a.positive_class,
    };
    let evaluation = evaluate(&records, &labels, &cfg)?;
    print_paths(&write_evaluation(&a.out, &evaluation)?);
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let ra: EvaluationReport = read_json(&a.report_a)?;
    let rb: EvaluationReport = read_json(&a.report_b)?;
    let comparison = compare_reports(&ra, &rb)?;
    create_parent(&a.out)?;
    write_json(&a.out, &comparison)?;
    for m in &comparison.metrics {
        println!(
            "{}: {} vs {}, p = {:.3e}{}",
            m.metric,
            m.point_a,
            m.point_b,
            m.p_value,
            if m.significant { " *" } else { "" }
        );
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let (records, labels) = load_inputs(&a.inputs)?;
    let rows = mc_sweep(&records, &labels, &a.ns)?;
    create_parent(&a.out)?;
    write_sweep_csv(&a.out, &rows)?;
    println!("{}", a.out.display());
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => read_json::<ExperimentConfig>(path)?,
        None => ExperimentConfig::with_classes(a.k),
    };
    if let Some(arch) = a.architecture {
        cfg.architecture = match arch {
            Arch::Shallow => Architecture::shallow(),
            Arch::Deep => Architecture::deep(),
        };
    }
    if let Some(n) = a.n_mc {
        cfg.n_mc = n;
        cfg.sweep.retain(|&s| s <= n);
    }
    if let Some(b) = a.bootstrap_iters {
        cfg.bootstrap_iterations = b;
    }
    if let Some(b) = a.bins {
        cfg.n_bins = b;
    }
    cfg.seed = a.seed;
    if let Some(s) = a.cohort_seed {
        cfg.cohort.seed = s;
    }
    let manifest = simulate(&cfg, &a.out)?;
    println!("{} files written to {}", manifest.files.len() + 1, a.out.display());
    println!("manifest sha256 {}", manifest_hash(&a.out)?);
    Ok(())
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(Error::from),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let message: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty() && !l.starts_with("For more information"))
                .collect();
            eprintln!("error[usage]: {}", message.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.code());
            ExitCode::FAILURE
        }
    }
}
