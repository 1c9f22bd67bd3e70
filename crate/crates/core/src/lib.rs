//! Expert-assisted optimistic reinforcement learning over linear value
//! parameters, together with the adversarial environments that probe its
//! limits.
//!
//! The learner ([`delphi`]) searches a version space of linear value
//! parameters: optimistic choice of the parameter, consistency-checked
//! rollouts against measured temporal-difference vectors, and an expert
//! query whenever no action looks consistent. Supporting casts:
//!
//! - [`mdp`] — episodic tabular simulator with checkpoint resets;
//! - [`td`] — TD-vector measurement and exact computation;
//! - [`vspace`] — ball∩slabs version space and its optimistic program;
//! - [`oracle`] — the interactive expert with call accounting;
//! - [`exact`] — value iteration, policy evaluation, Eluder verification;
//! - [`envs`] — sanity suites, the hypercube construction, wrappers, and
//!   the binary-tree linearity fixture;
//! - [`cubegame`] — the abstract hypercube game with its query protocol;
//! - [`report`] — machine-readable run artifacts.

pub mod cubegame;
pub mod delphi;
pub mod envs;
pub mod exact;
pub mod linalg;
pub mod mdp;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod td;
pub mod vspace;

pub use delphi::{
    compute_hyperparameters, compute_hyperparameters_with, consistency_test, run_delphi,
    run_delphi_q, DelphiError, DelphiOutcome, HyperParams, InducedPolicy, Overrides, RunConfig,
    ThresholdMode,
};
pub use mdp::{FeatureMap, MdpError, MdpSim, QFeatureMap, State, StateId, TabularMdp};
pub use oracle::{ExpertMode, ExpertOracle, OracleError};
pub use report::{BreakRecord, ConstraintRecord, RunRecord, RunStats, Termination};
pub use td::{TdError, TdTag, TdVector};
pub use vspace::{OptimisticSolution, VersionSpace, VspaceError};
