//! Experiment orchestration: parameter tuning, batch runs with a manifest,
//! and statistical comparison of the stored runs.

mod compare;
mod experiment;
mod tuning;

pub use compare::{
    compare_archive, compare_runs, compare_with, ComparisonReport, InstanceComparison,
    OptimizerSummary, PairComparison, PairTest, RunSummary, DEFAULT_ALPHA,
};
pub use experiment::{
    instance_label, run_experiment, CellStatus, ExperimentPlan, Manifest, ManifestEntry,
    NamedConfig, MANIFEST_FILE, RECORDS_DIR,
};
pub use tuning::{
    tune_config, tune_parameter, tune_parameter_from, tuning_seeds, Guards, ParameterTrace,
    StartReport, Step, TuneOptions, TuneReport, TuneResult, TuneStep, MIN_POP, MIN_PROB, POP_STEP,
    PROB_STEP, TUNE_ITERATIONS, TUNE_SEEDS,
};
