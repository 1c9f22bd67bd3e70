//! Temporal-difference vectors: `Δ_{s,a} = r(s,a) ⊕ (E[φ(s')] − φ(s))`.
//!
//! `⟨Δ_{s,a}, 1 ⊕ θ⟩ = 0` exactly when `v_θ` satisfies the Bellman equation
//! at `(s, a)` — the orthogonality constraint the whole search runs on.
//! [`measure_td`] estimates the vector by repeated play with checkpoint
//! resets; [`true_td`] computes it from the tables for tests and exact
//! evaluation.

use thiserror::Error;

use crate::linalg::{one_oplus_dot, sub};
use crate::mdp::{FeatureMap, MdpError, MdpSim, QFeatureMap, StateId, TabularMdp};

#[derive(Debug, Error, PartialEq)]
pub enum TdError {
    #[error("sample count must be positive")]
    InvalidArgument,
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error("two distinct successors observed for one state-action pair ({0} vs {1})")]
    DeterminismViolation(StateId, StateId),
}

/// Provenance of a TD vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdTag {
    /// Estimated with the per-action sample budget.
    Measured,
    /// Estimated with the enlarged post-oracle budget.
    Refined,
    /// Computed from the environment tables.
    Exact,
}

/// A `(d+1)`-vector: reward coordinate first, then the feature difference.
#[derive(Debug, Clone, PartialEq)]
pub struct TdVector {
    pub values: Vec<f64>,
    pub sample_count: u64,
    pub tag: TdTag,
}

impl TdVector {
    /// `⟨Δ, 1 ⊕ θ⟩`.
    pub fn residual(&self, theta: &[f64]) -> f64 {
        one_oplus_dot(&self.values, theta)
    }
}

/// Estimate `Δ_{s,a}` with `n` independent transitions from the simulator's
/// current state, resetting to the checkpoint after each. Consumes exactly
/// `n` samples and leaves the simulator back at `s` so the caller can roll
/// forward immediately.
pub fn measure_td(
    sim: &mut MdpSim,
    features: &FeatureMap,
    action: usize,
    n: u64,
) -> Result<TdVector, TdError> {
    if n == 0 {
        return Err(TdError::InvalidArgument);
    }
    let s = sim.current();
    let phi_s = features.features(s.id)?.to_vec();
    let mut acc = vec![0.0; features.dim() + 1];
    for _ in 0..n {
        let (reward, next) = sim.step(action)?;
        let phi_next = features.features(next.id)?;
        acc[0] += reward;
        for (j, slot) in acc[1..].iter_mut().enumerate() {
            *slot += phi_next[j] - phi_s[j];
        }
        sim.reset_to_checkpoint()?;
    }
    for v in acc.iter_mut() {
        *v /= n as f64;
    }
    Ok(TdVector {
        values: acc,
        sample_count: n,
        tag: TdTag::Measured,
    })
}

/// The exact TD vector from the environment tables.
pub fn true_td(
    mdp: &TabularMdp,
    features: &FeatureMap,
    s: StateId,
    action: usize,
) -> Result<TdVector, TdError> {
    if mdp.is_terminal(s) {
        return Err(TdError::Mdp(MdpError::TerminalStep(s)));
    }
    if action >= mdp.action_count() {
        return Err(TdError::Mdp(MdpError::InvalidAction {
            action,
            actions: mdp.action_count(),
        }));
    }
    let phi_s = features.features(s)?;
    let mut expected_next = vec![0.0; features.dim()];
    for &(succ, p) in mdp.successors(s, action) {
        let phi = features.features(succ)?;
        for (slot, &v) in expected_next.iter_mut().zip(phi) {
            *slot += p * v;
        }
    }
    let mut values = Vec::with_capacity(features.dim() + 1);
    values.push(mdp.reward(s, action).mean());
    values.extend(sub(&expected_next, phi_s));
    Ok(TdVector {
        values,
        sample_count: 0,
        tag: TdTag::Exact,
    })
}

// ---------------------------------------------------------------------------
// Action-value variant (deterministic dynamics)
// ---------------------------------------------------------------------------

/// One measured transition for the action-value variant: the mean reward at
/// `(s, a)` and the unique successor, from which the TD vector against any
/// follow-up action can be assembled without further samples.
#[derive(Debug, Clone, PartialEq)]
pub struct QTransition {
    pub state: StateId,
    pub action: usize,
    pub mean_reward: f64,
    pub successor: StateId,
    pub sample_count: u64,
}

impl QTransition {
    /// `Δ = r̄ ⊕ (φ(s', a') − φ(s, a))` for a candidate next action. Pass
    /// `None` when the successor is terminal (its features are zero for
    /// every action).
    pub fn td_vector(
        &self,
        qf: &QFeatureMap,
        next_action: Option<usize>,
        tag: TdTag,
    ) -> Result<TdVector, TdError> {
        let phi_sa = qf.features(self.state, self.action)?;
        let phi_next = qf.features(self.successor, next_action.unwrap_or(0))?;
        let mut values = Vec::with_capacity(qf.dim() + 1);
        values.push(self.mean_reward);
        values.extend(sub(phi_next, phi_sa));
        Ok(TdVector {
            values,
            sample_count: self.sample_count,
            tag,
        })
    }
}

/// Measure the `(s, a)` transition `n` times under deterministic dynamics.
/// Raises [`TdError::DeterminismViolation`] the moment two different
/// successors are observed. Leaves the simulator at `s`.
pub fn measure_q_transition(sim: &mut MdpSim, action: usize, n: u64) -> Result<QTransition, TdError> {
    if n == 0 {
        return Err(TdError::InvalidArgument);
    }
    let s = sim.current();
    let mut total_reward = 0.0;
    let mut successor: Option<StateId> = None;
    for _ in 0..n {
        let (reward, next) = sim.step(action)?;
        total_reward += reward;
        match successor {
            None => successor = Some(next.id),
            Some(seen) if seen != next.id => {
                return Err(TdError::DeterminismViolation(seen, next.id));
            }
            _ => {}
        }
        sim.reset_to_checkpoint()?;
    }
    Ok(QTransition {
        state: s.id,
        action,
        mean_reward: total_reward / n as f64,
        successor: successor.unwrap(),
        sample_count: n,
    })
}

/// Exact analogue of [`measure_q_transition`] from the tables.
pub fn true_q_transition(
    mdp: &TabularMdp,
    s: StateId,
    action: usize,
) -> Result<QTransition, TdError> {
    let successors = mdp.successors(s, action);
    if successors.len() != 1 {
        return Err(TdError::DeterminismViolation(
            successors[0].0,
            successors.last().unwrap().0,
        ));
    }
    Ok(QTransition {
        state: s,
        action,
        mean_reward: mdp.reward(s, action).mean(),
        successor: successors[0].0,
        sample_count: 0,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::envs::fixtures;
    use crate::exact;
    use crate::mdp::MdpSim;

    #[test]
    fn deterministic_pair_measures_exactly() {
        // Reward 0.5, one-hot e1 -> e2: expect (0.5, -1, +1, 0).
        let mdp = fixtures::uniform_reward_chain(2, 0.5);
        let fm = FeatureMap::one_hot(&mdp);
        let mut sim = MdpSim::new(Arc::new(mdp), 1);
        let td = measure_td(&mut sim, &fm, 0, 3).unwrap();
        assert_eq!(td.values, vec![0.5, -1.0, 1.0]);
        assert_eq!(sim.samples(), 3);
        assert_eq!(sim.current().horizon, 1);
    }

    #[test]
    fn zero_samples_rejected() {
        let mdp = fixtures::uniform_reward_chain(2, 0.5);
        let fm = FeatureMap::one_hot(&mdp);
        let mut sim = MdpSim::new(Arc::new(mdp), 1);
        assert_eq!(measure_td(&mut sim, &fm, 0, 0), Err(TdError::InvalidArgument));
    }

    #[test]
    fn measurement_from_terminal_is_an_error() {
        let mdp = fixtures::uniform_reward_chain(2, 0.5);
        let fm = FeatureMap::one_hot(&mdp);
        let mut sim = MdpSim::new(Arc::new(mdp), 1);
        sim.step(0).unwrap();
        sim.step(0).unwrap();
        assert!(matches!(
            measure_td(&mut sim, &fm, 0, 1),
            Err(TdError::Mdp(MdpError::TerminalStep(_)))
        ));
    }

    #[test]
    fn bernoulli_reward_concentrates() {
        let mdp = fixtures::bernoulli_reward_state(0.5);
        let fm = FeatureMap::one_hot(&mdp);
        let mut sim = MdpSim::new(Arc::new(mdp), 7);
        let td = measure_td(&mut sim, &fm, 0, 10_000).unwrap();
        assert!((td.values[0] - 0.5).abs() < 0.02, "mean {}", td.values[0]);
    }

    #[test]
    fn expert_action_orthogonal_to_true_parameter() {
        // On a realizable one-hot instance the exact TD vector at the expert
        // action is orthogonal to 1 ⊕ θ° — the Bellman fixed point.
        let env = fixtures::stochastic_instance(0);
        for s in 0..env.mdp.state_count() {
            if env.mdp.is_terminal(s) {
                continue;
            }
            let td = true_td(&env.mdp, &env.features, s, env.expert_policy[s]).unwrap();
            assert!(
                td.residual(&env.theta_circ).abs() <= 1e-12,
                "residual {} at state {s}",
                td.residual(&env.theta_circ)
            );
        }
    }

    #[test]
    fn non_expert_action_breaks_the_fixed_point() {
        // Hand-computed Bellman residual on a 3-state deterministic chain
        // with a detour action.
        let mdp = fixtures::branching_example();
        let fm = FeatureMap::one_hot(&mdp);
        let (policy, table) = exact::exact_optimal(&mdp);
        let theta: Vec<f64> = (0..mdp.state_count())
            .filter(|&s| !mdp.is_terminal(s))
            .map(|s| table.v[s])
            .collect();
        let s0 = mdp.layer_states(1).next().unwrap();
        let wrong = 1 - policy[s0];
        let td = true_td(&mdp, &fm, s0, wrong).unwrap();
        // Residual = r(s0, wrong) + v(succ) − v(s0), i.e. the q-gap.
        let expected = table.q[s0][wrong] - table.v[s0];
        assert!((td.residual(&theta) - expected).abs() <= 1e-12);
        assert!(td.residual(&theta).abs() > 1e-6);
    }

    #[test]
    fn deterministic_env_measured_equals_true_td() {
        let mdp = fixtures::uniform_reward_chain(3, 0.25);
        let fm = FeatureMap::one_hot(&mdp);
        let exact_td = true_td(&mdp, &fm, 0, 0).unwrap();
        let mut sim = MdpSim::new(Arc::new(mdp), 5);
        let measured = measure_td(&mut sim, &fm, 0, 1).unwrap();
        assert_eq!(measured.values, exact_td.values);
    }

    #[test]
    fn q_transition_detects_stochastic_dynamics() {
        let mdp = fixtures::three_outcome_state(&[0.3, 0.3, 0.4]);
        let mut sim = MdpSim::new(Arc::new(mdp), 3);
        let result = measure_q_transition(&mut sim, 0, 50);
        assert!(matches!(result, Err(TdError::DeterminismViolation(_, _))));
    }
}
