//! The interactive expert interface: a deterministic policy that can be
//! queried state by state, with exact call accounting and an optional
//! budget.
//!
//! The oracle reveals only the action — never rewards or values.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::exact;
use crate::mdp::{State, TabularMdp};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("oracle budget of {0} calls exhausted")]
    BudgetExceeded(u64),
    #[error("no expert action at a terminal state (id {0})")]
    NoAction(usize),
    #[error("unsupported environment: {0}")]
    Unsupported(String),
}

/// How to build a tabular expert.
#[derive(Debug, Clone)]
pub enum ExpertMode {
    /// Exact backward induction; the expert is an optimal policy.
    Optimal,
    /// Wrap a caller-provided per-state action table.
    Provided(Vec<usize>),
}

/// A queryable deterministic expert with atomic call counting.
///
/// Counting is atomic so one oracle can be shared across cloned simulators;
/// the budget, when set, is enforced on every query.
#[derive(Debug)]
pub struct ExpertOracle {
    policy: Vec<usize>,
    horizon: u32,
    calls: AtomicU64,
    budget: Option<u64>,
}

impl ExpertOracle {
    /// Build an expert for a tabular MDP.
    pub fn make_tabular_expert(mdp: &TabularMdp, mode: ExpertMode) -> Result<Self, OracleError> {
        let policy = match mode {
            ExpertMode::Optimal => exact::exact_optimal(mdp).0,
            ExpertMode::Provided(table) => {
                if table.len() < mdp.state_count() {
                    return Err(OracleError::Unsupported(format!(
                        "policy table covers {} of {} states",
                        table.len(),
                        mdp.state_count()
                    )));
                }
                for (s, &a) in table.iter().enumerate() {
                    if !mdp.is_terminal(s) && a >= mdp.action_count() {
                        return Err(OracleError::Unsupported(format!(
                            "action {a} out of range at state {s}"
                        )));
                    }
                }
                table
            }
        };
        Ok(Self {
            policy,
            horizon: mdp.horizon(),
            calls: AtomicU64::new(0),
            budget: None,
        })
    }

    /// Enforce a maximum number of queries. Off by default; lower-bound
    /// regime experiments set this explicitly.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    /// Ask for the expert action at `s`. Deterministic; increments the call
    /// counter by exactly one.
    pub fn query(&self, s: State) -> Result<usize, OracleError> {
        if s.horizon > self.horizon {
            return Err(OracleError::NoAction(s.id));
        }
        let prior = self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(budget) = self.budget {
            if prior >= budget {
                self.calls.fetch_sub(1, Ordering::SeqCst);
                return Err(OracleError::BudgetExceeded(budget));
            }
        }
        Ok(self.policy[s.id])
    }

    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// The underlying action table (for exact evaluation in tests and
    /// reports; not part of the learner's information model).
    pub fn policy_table(&self) -> &[usize] {
        &self.policy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::fixtures;
    use crate::exact;

    #[test]
    fn optimal_mode_matches_value_iteration() {
        let mdp = fixtures::branching_example();
        let oracle = ExpertOracle::make_tabular_expert(&mdp, ExpertMode::Optimal).unwrap();
        let (star, star_table) = exact::exact_optimal(&mdp);
        let expert_table = exact::exact_value(&mdp, oracle.policy_table()).unwrap();
        let s0 = mdp.layer_states(1).next().unwrap();
        assert_eq!(oracle.policy_table(), star.as_slice());
        assert!((expert_table.v[s0] - star_table.v[s0]).abs() <= 1e-12);
    }

    #[test]
    fn two_state_chain_optimal_by_hand() {
        // One action only; backward induction can pick nothing else.
        let mdp = fixtures::two_state_chain();
        let oracle = ExpertOracle::make_tabular_expert(&mdp, ExpertMode::Optimal).unwrap();
        assert!(oracle.policy_table().iter().all(|&a| a == 0));
    }

    #[test]
    fn provided_mode_returns_the_table_entry() {
        let mdp = fixtures::branching_example();
        let table = vec![1; mdp.state_count()];
        let oracle =
            ExpertOracle::make_tabular_expert(&mdp, ExpertMode::Provided(table)).unwrap();
        let s = mdp.state(0);
        assert_eq!(oracle.query(s).unwrap(), 1);
    }

    #[test]
    fn repeated_queries_are_deterministic_and_counted() {
        let mdp = fixtures::branching_example();
        let oracle = ExpertOracle::make_tabular_expert(&mdp, ExpertMode::Optimal).unwrap();
        let s = mdp.state(0);
        let first = oracle.query(s).unwrap();
        for _ in 0..99 {
            assert_eq!(oracle.query(s).unwrap(), first);
        }
        assert_eq!(oracle.call_count(), 100);
    }

    #[test]
    fn zero_budget_fails_on_first_call() {
        let mdp = fixtures::branching_example();
        let oracle = ExpertOracle::make_tabular_expert(&mdp, ExpertMode::Optimal)
            .unwrap()
            .with_budget(0);
        assert_eq!(
            oracle.query(mdp.state(0)),
            Err(OracleError::BudgetExceeded(0))
        );
        assert_eq!(oracle.call_count(), 0);
    }

    #[test]
    fn terminal_states_have_no_action() {
        let mdp = fixtures::two_state_chain();
        let oracle = ExpertOracle::make_tabular_expert(&mdp, ExpertMode::Optimal).unwrap();
        let terminal = mdp.layer_states(mdp.horizon() + 1).next().unwrap();
        assert_eq!(
            oracle.query(mdp.state(terminal)),
            Err(OracleError::NoAction(terminal))
        );
    }
}
