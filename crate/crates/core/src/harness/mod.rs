//! Experiment orchestration: configuration, training and evaluation runs,
//! the budget study, the filtered-eigensolver comparison, geometry
//! cross-validation, and artifact files.
//!
//! All randomness is derived from [`ExperimentConfig::seed`], so a run is a
//! pure function of its configuration.

mod artifacts;
mod config;
mod grid;
mod run;

pub use artifacts::{
    ansatz_text, emit_artifacts, emit_baseline_report, emit_budget_report, emit_crossval_report, parse_ansatz_text,
    read_csv, read_eval_csv, read_series_csv, write_csv, write_eval_csv, write_series_csv, EvalCsvRow, ANSATZ_FILE,
    CHECKPOINT_FILE, CONFIG_FILE, EVAL_FILE, SERIES_FILE,
};
pub use config::{
    derive_seed, BaselineConfig, CrossvalConfig, ExperimentConfig, GeometrySpec, MoleculeConfig, PlateauConfig,
    SectorSpec, SeedStream,
};
pub use grid::GeometryGrid;
pub use run::{
    build_problems, energy_after, evaluate_checkpoint, evaluate_greedy, evaluation_starts, greedy_rollout, mean_error,
    run_baseline_comparison, run_budget_study, run_crossval, run_fold, run_training, run_training_with_progress,
    tail_stats, BaselineReport, BaselineRow, BudgetArm, BudgetReport, CrossvalReport, EpisodeRecord, EvalRow,
    FoldResult, ProblemSet, RunReport,
};
