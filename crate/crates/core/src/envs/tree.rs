//! Binary-tree fixture separating action-value linearity from policy
//! linearity.
//!
//! Depth-`H` binary tree, actions left/right, deterministic transitions,
//! reward −1 for left and +1 for right. The reference policy alternates:
//! after a left edge it plays right and vice versa. Its action-value
//! function is realized exactly by one-dimensional features
//! `φ(s, a) = q°(s, a)` with parameter 1, yet the greedy-in-features rule
//! plays right everywhere it matters and so disagrees with the policy.
//!
//! Rewards live in `{−1, +1}`, outside the simulator's `[0,1]` convention;
//! the fixture is built through the unchecked constructor and is only ever
//! evaluated exactly, never fed to the learner.

use std::sync::Arc;

use crate::exact;
use crate::mdp::{QFeatureMap, RewardDist, StartDist, StateId, TabularMdp};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// The fixture bundle.
#[derive(Debug, Clone)]
pub struct TreeCounterexample {
    pub mdp: Arc<TabularMdp>,
    /// One-dimensional features `φ(s, a) = q°(s, a)` (realizing parameter 1).
    pub q_features: QFeatureMap,
    /// The alternating reference policy.
    pub expert_policy: Vec<usize>,
    /// Exact `q°` per state and action.
    pub q_table: Vec<Vec<f64>>,
    /// Depth of each state (root at 0).
    pub depth_of: Vec<u32>,
    /// Last action taken to reach the state (`None` at the root).
    pub reached_by: Vec<Option<usize>>,
}

/// Build the depth-`H` tree. `H` must be even and at least 2 so the parity
/// pattern of `q°` (0 at even depths, ∓1 at odd) closes at the horizon.
pub fn build_tree_counterexample(h: u32) -> TreeCounterexample {
    assert!(h >= 2 && h % 2 == 0, "tree fixture needs an even H ≥ 2");
    // States: full binary tree of depth H (internal layers 0..H-1 are
    // playable; depth H is the terminal layer).
    let mut layer_of = Vec::new();
    let mut depth_of = Vec::new();
    let mut reached_by = Vec::new();
    let mut first_of_depth = Vec::new();
    for depth in 0..=h {
        first_of_depth.push(layer_of.len());
        for i in 0..(1usize << depth) {
            layer_of.push(depth + 1);
            depth_of.push(depth);
            reached_by.push(if depth == 0 {
                None
            } else {
                Some(i & 1) // low bit is the last action on the path code
            });
        }
    }
    let n = layer_of.len();
    let child = |s: StateId, a: usize, depth: u32| -> StateId {
        let offset = s - first_of_depth[depth as usize];
        first_of_depth[depth as usize + 1] + 2 * offset + a
    };
    let mut transitions = vec![Vec::new(); n];
    let mut rewards = vec![Vec::new(); n];
    for s in 0..n {
        let depth = depth_of[s];
        if depth == h {
            continue;
        }
        transitions[s] = vec![
            vec![(child(s, LEFT, depth), 1.0)],
            vec![(child(s, RIGHT, depth), 1.0)],
        ];
        rewards[s] = vec![
            RewardDist::Deterministic { value: -1.0 },
            RewardDist::Deterministic { value: 1.0 },
        ];
    }
    let mdp = TabularMdp::new_unbounded(
        h,
        2,
        layer_of,
        transitions,
        rewards,
        StartDist::Deterministic { state: 0 },
    )
    .expect("tree tables are well-formed");

    // Alternating policy: flip whatever edge led here; play right at the root.
    let expert_policy: Vec<usize> = (0..n)
        .map(|s| match reached_by[s] {
            Some(LEFT) => RIGHT,
            Some(RIGHT) => LEFT,
            _ => RIGHT,
        })
        .collect();
    let table = exact::exact_value(&mdp, &expert_policy).unwrap();
    let q_table: Vec<Vec<f64>> = table.q.clone();

    // Features are the q-values themselves, so parameter 1 is exact.
    let q_feature_table: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|s| {
            if mdp.is_terminal(s) {
                vec![vec![0.0]]
            } else {
                q_table[s].iter().map(|&q| vec![q]).collect()
            }
        })
        .collect();
    // q-values here are in {−1, 0, 1}: unit norm bound holds as-is.
    let q_features = QFeatureMap::new(&mdp, 1, q_feature_table).unwrap();

    TreeCounterexample {
        mdp: Arc::new(mdp),
        q_features,
        expert_policy,
        q_table,
        depth_of,
        reached_by,
    }
}

impl TreeCounterexample {
    /// Max over pairs of `|q°(s,a) − ⟨φ°(s,a), 1⟩|`.
    pub fn linearity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..self.mdp.state_count() {
            if self.mdp.is_terminal(s) {
                continue;
            }
            for a in 0..2 {
                let phi = self.q_features.features(s, a).unwrap();
                worst = worst.max((self.q_table[s][a] - phi[0]).abs());
            }
        }
        worst
    }

    /// States where the policy action is strictly outside the greedy
    /// argmax of the features, i.e. where no tie-break can reconcile the
    /// two.
    pub fn greedy_disagreements(&self) -> Vec<StateId> {
        (0..self.mdp.state_count())
            .filter(|&s| {
                if self.mdp.is_terminal(s) {
                    return false;
                }
                let left = self.q_features.features(s, LEFT).unwrap()[0];
                let right = self.q_features.features(s, RIGHT).unwrap()[0];
                let expert = if self.expert_policy[s] == LEFT { left } else { right };
                expert < left.max(right)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_values_follow_the_parity_table() {
        // 0 at even depths; −1 left / +1 right at odd depths.
        let tree = build_tree_counterexample(4);
        for s in 0..tree.mdp.state_count() {
            if tree.mdp.is_terminal(s) {
                continue;
            }
            let depth = tree.depth_of[s];
            if depth % 2 == 0 {
                assert!((tree.q_table[s][LEFT]).abs() <= 1e-12);
                assert!((tree.q_table[s][RIGHT]).abs() <= 1e-12);
            } else {
                assert!((tree.q_table[s][LEFT] + 1.0).abs() <= 1e-12);
                assert!((tree.q_table[s][RIGHT] - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn linearity_residual_is_zero() {
        let tree = build_tree_counterexample(4);
        assert_eq!(tree.linearity_residual(), 0.0);
    }

    #[test]
    fn greedy_differs_from_the_policy_after_right_edges_at_odd_depth() {
        let tree = build_tree_counterexample(4);
        let disagreements = tree.greedy_disagreements();
        assert!(!disagreements.is_empty());
        // At every odd-depth state reached by a right edge the policy says
        // left while the feature argmax strictly prefers right.
        for s in 0..tree.mdp.state_count() {
            if tree.mdp.is_terminal(s) || tree.depth_of[s] % 2 == 0 {
                continue;
            }
            if tree.reached_by[s] == Some(RIGHT) {
                assert_eq!(tree.expert_policy[s], LEFT);
                let left = tree.q_features.features(s, LEFT).unwrap()[0];
                let right = tree.q_features.features(s, RIGHT).unwrap()[0];
                assert!(right > left);
                assert!(disagreements.contains(&s));
            }
        }
    }

    #[test]
    fn rewards_are_plus_minus_one() {
        let tree = build_tree_counterexample(2);
        for s in 0..tree.mdp.state_count() {
            if tree.mdp.is_terminal(s) {
                continue;
            }
            assert_eq!(tree.mdp.reward(s, LEFT).mean(), -1.0);
            assert_eq!(tree.mdp.reward(s, RIGHT).mean(), 1.0);
        }
    }
}
