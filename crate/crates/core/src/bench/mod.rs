//! Experiment orchestration: configuration, grids, trial scheduling,
//! persistence, selection and reporting.

pub mod config;
pub mod grid;
pub mod records;
pub mod report;
pub mod runner;
pub mod select;

pub use config::{DatasetConfig, EpsilonUnits, ExperimentConfig, Loader, Repetitions, SplitEntry, SvrSearch};
pub use grid::{expand_grid, svr_coarse_grid, svr_refine_grid, HyperTuple};
pub use records::{read_records, RecordWriter, Stage, TrialRecord, TrialStatus};
pub use report::{build_report, emit_report, run_dynamics, BenchmarkReport, CellResult};
pub use runner::{
    gpr_initial_noise, load_all_records, prepare_dataset, run_experiment, run_experiment_on, trial_seed, RunOptions,
    RunSummary,
};
pub use select::{select_best, summarize, TupleSummary};
