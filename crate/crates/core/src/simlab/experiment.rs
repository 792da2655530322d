//! The end-to-end simulated experiment: train an MC dropout model and a
//! conventional model per head, evaluate both on the test split, compare
//! them, and sweep the number of MC samples.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::{compare_reports, evaluate, write_evaluation, Comparison, Evaluation, EvaluationConfig};
use crate::records::{write_labels, write_records, HeadKind, LabelSet, RecordFormat, RecordSet};
use crate::report::{to_json_string, write_json};
use crate::scoring::Inference;
use crate::stats::DEFAULT_ITERATIONS;

use super::cohort::{generate_cohort, CohortConfig, Split, SyntheticCohort};
use super::loss::Loss;
use super::mlp::{MlpConfig, MlpModel};
use super::predict::predict_records;
use super::sweep::{mc_sweep, write_sweep_csv, SweepRow, DEFAULT_SWEEP};
use super::train::{train, TrainConfig, TrainHistory};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub dropout_rate: f64,
}

impl Architecture {
    /// Two hidden layers.
    pub fn shallow() -> Self {
        Self {
            hidden: vec![64, 64],
            dropout_rate: 0.5,
        }
    }

    /// Four hidden layers.
    pub fn deep() -> Self {
        Self {
            hidden: vec![64, 64, 64, 64],
            dropout_rate: 0.3,
        }
    }
}

/// Optimizer settings shared by every head; the loss follows the head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for Optimizer {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 16,
            learning_rate: 0.01,
            momentum: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cohort: CohortConfig,
    pub architecture: Architecture,
    pub optimizer: Optimizer,
    /// Head names as in record files; `k` comes from the cohort.
    pub heads: Vec<String>,
    pub n_mc: usize,
    pub sweep: Vec<usize>,
    pub bootstrap_iterations: usize,
    pub n_bins: usize,
    /// Seeds weight initialization, training, prediction and bootstrap.
    pub seed: u64,
}

impl ExperimentConfig {
    /// Default experiment on a `k`-class cohort.
    pub fn with_classes(k: usize) -> Self {
        Self {
            cohort: CohortConfig::with_classes(k),
            architecture: Architecture::shallow(),
            optimizer: Optimizer::default(),
            heads: ["binary", "multiclass", "ordinal", "regression"].map(String::from).to_vec(),
            n_mc: 50,
            sweep: DEFAULT_SWEEP.to_vec(),
            bootstrap_iterations: DEFAULT_ITERATIONS,
            n_bins: crate::metrics::DEFAULT_BINS,
            seed: 7,
        }
    }

    /// Same experiment with every seed shifted, for repeated runs.
    pub fn reseeded(&self, offset: u64) -> Self {
        let mut c = self.clone();
        c.seed = c.seed.wrapping_add(offset);
        c.cohort.seed = c.cohort.seed.wrapping_add(offset);
        c
    }

    pub fn head_kinds(&self) -> Result<Vec<HeadKind>> {
        self.heads
            .iter()
            .map(|h| {
                let k = if h == "binary" { 2 } else { self.cohort.k };
                HeadKind::new(h, k).map_err(Error::InvalidInput)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.cohort.validate()?;
        if self.heads.is_empty() {
            return Err(Error::InvalidInput("no heads configured".into()));
        }
        self.head_kinds()?;
        if self.n_mc == 0 || self.sweep.iter().any(|&n| n == 0 || n > self.n_mc) {
            return Err(Error::InvalidInput(format!(
                "n_mc must be positive and cover every sweep entry, got {} and {:?}",
                self.n_mc, self.sweep
            )));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(to_json_string(self)?.as_bytes())))
    }
}

/// Seeds derived from the experiment seed; each head gets its own block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSeeds {
    pub init: u64,
    pub train: u64,
    pub predict: u64,
    pub bootstrap: u64,
}

impl TaskSeeds {
    pub fn derive(seed: u64, head_index: usize) -> Self {
        let base = seed.wrapping_mul(1_000).wrapping_add(head_index as u64 * 10);
        Self {
            init: base,
            train: base + 1,
            predict: base + 2,
            bootstrap: base + 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: MlpModel,
    pub history: TrainHistory,
}

/// Everything produced for one head.
#[derive(Debug, Clone)]
pub struct TaskResult {
    pub head: HeadKind,
    pub seeds: TaskSeeds,
    pub mc_model: TrainedModel,
    pub conventional_model: TrainedModel,
    /// MC rows plus the deterministic pass of the MC model.
    pub mc_records: RecordSet,
    /// Deterministic rows of the conventional model.
    pub conventional_records: RecordSet,
    pub labels: LabelSet,
    pub mc: Evaluation,
    pub conventional: Evaluation,
    pub comparison: Comparison,
    pub sweep: Vec<SweepRow>,
}

fn train_model(
    cohort: &SyntheticCohort,
    cfg: &ExperimentConfig,
    head: HeadKind,
    dropout_rate: f64,
    seeds: TaskSeeds,
) -> Result<TrainedModel> {
    let mut model = MlpModel::new(
        &MlpConfig {
            input_dim: cohort.config.feature_dim,
            hidden: cfg.architecture.hidden.clone(),
            dropout_rate,
            seed: seeds.init,
        },
        head,
    )?;
    let o = &cfg.optimizer;
    let history = train(
        &mut model,
        cohort,
        &TrainConfig {
            epochs: o.epochs,
            batch_size: o.batch_size,
            learning_rate: o.learning_rate,
            momentum: o.momentum,
            loss: Loss::for_head(head),
            seed: seeds.train,
        },
    )?;
    Ok(TrainedModel { model, history })
}

/// Trains both models for one head and evaluates them on the test split.
///
/// The conventional model shares architecture, initialization and training
/// schedule with the MC model but has no dropout layers, and is evaluated
/// with a single forward pass.
pub fn run_task(cohort: &SyntheticCohort, cfg: &ExperimentConfig, head_index: usize) -> Result<TaskResult> {
    let head = cfg.head_kinds()?[head_index];
    let seeds = TaskSeeds::derive(cfg.seed, head_index);
    let mc_model = train_model(cohort, cfg, head, cfg.architecture.dropout_rate, seeds)?;
    let conventional_model = train_model(cohort, cfg, head, 0.0, seeds)?;

    let mc_records = predict_records(&mc_model.model, cohort, Split::Test, cfg.n_mc, seeds.predict, true)?;
    let conventional_records = predict_records(&conventional_model.model, cohort, Split::Test, 0, seeds.predict, true)?;
    let labels = cohort.labels(Split::Test, head);

    let eval_cfg = |inference| EvaluationConfig {
        inference,
        bootstrap_iterations: cfg.bootstrap_iterations,
        seed: seeds.bootstrap,
        n_bins: cfg.n_bins,
        positive_boundary: None,
    };
    let mc = evaluate(&mc_records, &labels, &eval_cfg(Inference::MonteCarlo(cfg.n_mc)))?;
    let conventional = evaluate(&conventional_records, &labels, &eval_cfg(Inference::Deterministic))?;
    let comparison = compare_reports(&mc.report, &conventional.report)?;
    let sweep = mc_sweep(&mc_records, &labels, &cfg.sweep)?;
    Ok(TaskResult {
        head,
        seeds,
        mc_model,
        conventional_model,
        mc_records,
        conventional_records,
        labels,
        mc,
        conventional,
        comparison,
        sweep,
    })
}

/// Runs every configured head on one generated cohort.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TaskResult>> {
    cfg.validate()?;
    let cohort = generate_cohort(&cfg.cohort)?;
    (0..cfg.heads.len()).map(|i| run_task(&cohort, cfg, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestTask {
    pub head: String,
    pub k: usize,
    pub seeds: TaskSeeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub cohort_seed: u64,
    pub experiment_seed: u64,
    pub tasks: Vec<ManifestTask>,
    /// Paths relative to the output directory, in write order.
    pub files: Vec<ManifestFile>,
}

#[derive(Debug, Serialize)]
struct Histories<'a> {
    mc: &'a TrainHistory,
    conventional: &'a TrainHistory,
}

/// Writes one task's artifacts under `dir/<head>/` and returns their paths.
pub fn write_task(dir: &Path, task: &TaskResult) -> Result<Vec<PathBuf>> {
    let root = dir.join(task.head.name());
    let create = |p: &Path| std::fs::create_dir_all(p).map_err(|e| Error::from(e).in_file(p));
    create(&root)?;
    let mut files = Vec::new();
    let mut push = |p: PathBuf| {
        files.push(p);
    };

    let p = root.join("records_mc.csv");
    write_records(&p, RecordFormat::Csv, &task.mc_records)?;
    push(p);
    let p = root.join("records_conventional.csv");
    write_records(&p, RecordFormat::Csv, &task.conventional_records)?;
    push(p);
    let p = root.join("labels.csv");
    write_labels(&p, &task.labels)?;
    push(p);
    for (name, eval) in [("mc", &task.mc), ("conventional", &task.conventional)] {
        let sub = root.join(name);
        create(&sub)?;
        write_evaluation(&sub, eval)?.into_iter().for_each(&mut push);
    }
    let p = root.join("comparison.json");
    write_json(&p, &task.comparison)?;
    push(p);
    let p = root.join("sweep.csv");
    write_sweep_csv(&p, &task.sweep)?;
    push(p);
    let p = root.join("training.json");
    write_json(
        &p,
        &Histories {
            mc: &task.mc_model.history,
            conventional: &task.conventional_model.history,
        },
    )?;
    push(p);
    Ok(files)
}

fn file_entry(dir: &Path, path: &Path) -> Result<ManifestFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    let rel = path.strip_prefix(dir).unwrap_or(path);
    Ok(ManifestFile {
        path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Runs the experiment and writes all artifacts plus `manifest.json` to `dir`.
/// Identical configs give byte-identical directories.
pub fn simulate(cfg: &ExperimentConfig, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let tasks = run_experiment(cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    let mut paths = Vec::new();
    let config_path = dir.join("config.json");
    write_json(&config_path, cfg)?;
    paths.push(config_path);
    for task in &tasks {
        paths.extend(write_task(dir, task)?);
    }
    let manifest = Manifest {
        config: cfg.clone(),
        config_sha256: cfg.hash()?,
        cohort_seed: cfg.cohort.seed,
        experiment_seed: cfg.seed,
        tasks: tasks
            .iter()
            .map(|t| ManifestTask {
                head: t.head.name().to_string(),
                k: t.head.num_classes(),
                seeds: t.seeds,
            })
            .collect(),
        files: paths.iter().map(|p| file_entry(dir, p)).collect::<Result<_>>()?,
    };
    write_json(dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Hex SHA-256 of a written manifest file.
pub fn manifest_hash(dir: impl AsRef<Path>) -> Result<String> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let bytes = std::fs::read(&path).map_err(|e| Error::from(e).in_file(&path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
