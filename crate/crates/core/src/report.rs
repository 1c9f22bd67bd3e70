//! Machine-readable run artifacts: statistics, constraint dumps, and the
//! bundle consumed by post-hoc verification.

use serde::{Deserialize, Serialize};

use crate::mdp::StateId;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    /// A full batch of rollouts completed without a consistency break.
    Consistent,
    /// The iteration cap was exhausted; the last parameter was returned.
    Exhausted,
}

/// One consistency break: where it happened, how bad the best residual was,
/// and what the oracle said.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakRecord {
    pub iteration: u32,
    pub state_id: StateId,
    /// The minimum absolute TD residual over actions at the break state.
    pub min_residual: f64,
    /// The expert's reply. Absent only for action-value breaks whose
    /// successor is terminal, where no expert action exists to ask about.
    pub oracle_action: Option<usize>,
}

/// Accounting and trajectory of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub oracle_calls: u64,
    /// Simulator `step` calls consumed, including roll-forward transitions.
    pub exploratory_samples: u64,
    /// Episode restarts, accounted separately from samples.
    pub restarts: u64,
    /// Iterations used (outer-loop count, including the final one).
    pub iterations: u32,
    /// Optimistic predicted start value per iteration.
    pub optimistic_values: Vec<f64>,
    pub termination: Termination,
    /// The returned parameter.
    pub theta_hat: Vec<f64>,
    pub breaks: Vec<BreakRecord>,
}

/// One version-space constraint as dumped to JSON:
/// the refined TD vector, its threshold, and its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub delta: Vec<f64>,
    pub tau: f64,
    pub origin_state: StateId,
    pub iteration: u32,
}

/// Everything needed to audit a finished run offline: stats, the constraint
/// dump, and the parameter that was active at each break.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub stats: RunStats,
    pub constraints: Vec<ConstraintRecord>,
    /// `break_thetas[i]` is the parameter whose inconsistency produced
    /// `constraints[i]`.
    pub break_thetas: Vec<Vec<f64>>,
    /// The true parameter on realizable instances, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_circ: Option<Vec<f64>>,
}

/// One line of the optional oracle call log (JSON-lines).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleLogEntry {
    pub iteration: u32,
    pub state_id: StateId,
    pub action: usize,
    pub cumulative_count: u64,
}
