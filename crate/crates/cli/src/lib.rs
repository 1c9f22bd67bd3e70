//! Experiment harness around `delphi-core`: JSON-configured sweeps over
//! seeds, CSV/JSON reports, oracle-budget curves, and post-hoc run
//! verification.

pub mod config;
pub mod runner;
pub mod verify;

pub use config::{AlgoMode, CubeGameSpec, EnvSpec, ExperimentConfig, MisspecSpec};
pub use runner::{
    budgets_csv, compare_oracle_budgets, iterations_csv, run_experiment, runs_csv, Aggregate,
    BudgetRow, ExperimentReport, SeedOutcome, SeedRow,
};
pub use verify::{verify_run_dir, VerifyLine};
