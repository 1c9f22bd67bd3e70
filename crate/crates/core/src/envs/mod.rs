//! Concrete environments: tabular sanity instances with exactly linear
//! expert values, the adversarial hypercube construction, misspecification
//! wrappers, and the binary-tree linearity counterexample.

pub mod fixtures;
pub mod hypercube;
pub mod tree;
pub mod wrappers;

use std::sync::Arc;

use crate::mdp::{FeatureMap, QFeatureMap, TabularMdp};

/// A tabular environment bundled with everything a realizable run needs:
/// features, the expert policy, the true parameter, and its norm bound.
///
/// With one-hot features the expert's value table is itself the parameter,
/// so realizability is exact by construction.
#[derive(Debug, Clone)]
pub struct RealizableEnv {
    pub name: String,
    pub mdp: Arc<TabularMdp>,
    pub features: FeatureMap,
    pub expert_policy: Vec<usize>,
    /// `θ°` in the one-hot coordinate order.
    pub theta_circ: Vec<f64>,
    /// `B = ‖θ°‖₂`.
    pub b_bound: f64,
    /// Expert values for every state id (terminal entries zero).
    pub v_circ: Vec<f64>,
}

impl RealizableEnv {
    /// Expert value at the (deterministic) start state.
    pub fn v_circ_start(&self) -> f64 {
        match self.mdp.start_dist() {
            crate::mdp::StartDist::Deterministic { state } => self.v_circ[*state],
            crate::mdp::StartDist::Categorical { probs } => {
                probs.iter().map(|&(s, p)| p * self.v_circ[s]).sum()
            }
        }
    }
}

/// The action-value analogue: one-hot `(s, a)` features and `θ° = q°`.
#[derive(Debug, Clone)]
pub struct QRealizableEnv {
    pub name: String,
    pub mdp: Arc<TabularMdp>,
    pub q_features: QFeatureMap,
    pub expert_policy: Vec<usize>,
    pub theta_circ: Vec<f64>,
    pub b_bound: f64,
    pub v_circ: Vec<f64>,
}

impl QRealizableEnv {
    pub fn v_circ_start(&self) -> f64 {
        match self.mdp.start_dist() {
            crate::mdp::StartDist::Deterministic { state } => self.v_circ[*state],
            crate::mdp::StartDist::Categorical { probs } => {
                probs.iter().map(|&(s, p)| p * self.v_circ[s]).sum()
            }
        }
    }
}
