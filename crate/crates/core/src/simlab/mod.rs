//! Simulation lab: synthetic test-retest cohorts, a dropout MLP with four
//! output heads, MC inference and the end-to-end experiment.

pub mod cohort;
pub mod experiment;
pub mod loss;
pub mod mlp;
pub mod predict;
pub mod sweep;
pub mod train;

pub use cohort::{generate_cohort, CohortConfig, Split, SyntheticCohort};
pub use experiment::{
    manifest_hash, run_experiment, run_task, simulate, Architecture, ExperimentConfig, Manifest, Optimizer, TaskResult,
};
pub use loss::Loss;
pub use mlp::{DropoutMasks, MlpConfig, MlpModel};
pub use predict::predict_records;
pub use sweep::{mc_sweep, sweep_csv, write_sweep_csv, SweepRow, DEFAULT_SWEEP};
pub use train::{fit, train, Example, TrainConfig, TrainHistory};
