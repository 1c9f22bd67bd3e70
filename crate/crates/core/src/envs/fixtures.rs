//! Tabular sanity environments.
//!
//! The suites here back the test and acceptance batteries:
//!
//! - [`det_instance`]: deterministic realizable instances (exact-measurement
//!   regime, oracle-parsimony checks);
//! - [`stochastic_instance`]: stochastic realizable instances. Their shape
//!   is a rewarded "good" path against low-reward sinks; non-expert rows
//!   carry the stochasticity (Bernoulli rewards, split transitions) while
//!   expert rows stay deterministic, so refined expert measurements are
//!   noise-free and elimination thresholds can stay tight;
//! - [`q_instance`]: deterministic instances with one-hot `(s,a)` features
//!   for the action-value variant.
//!
//! All of them use one-hot features, making the expert value table itself
//! the linear parameter (`B = ‖v°‖₂`).

use std::sync::Arc;

use rand::Rng;

use crate::exact;
use crate::linalg::norm2;
use crate::mdp::{
    FeatureMap, QFeatureMap, RewardDist, StartDist, StateId, TabularMdp,
};
use crate::rng::{derive_seed, seeded_rng};

use super::{QRealizableEnv, RealizableEnv};

/// Two-state deterministic chain, single action, reward 1 per step.
pub fn two_state_chain() -> TabularMdp {
    uniform_reward_chain(2, 1.0)
}

/// Deterministic chain of `h` states with the same reward at every step.
pub fn uniform_reward_chain(h: u32, reward: f64) -> TabularMdp {
    let n = h as usize + 1;
    let layer_of: Vec<u32> = (1..=h + 1).collect();
    let mut transitions = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for s in 0..n {
        if s + 1 < n {
            transitions.push(vec![vec![(s + 1, 1.0)]]);
            rewards.push(vec![RewardDist::Deterministic { value: reward }]);
        } else {
            transitions.push(Vec::new());
            rewards.push(Vec::new());
        }
    }
    TabularMdp::new(h, 1, layer_of, transitions, rewards, StartDist::Deterministic { state: 0 })
        .unwrap()
}

/// One state, one action, Bernoulli(`p`) reward into the terminal layer.
pub fn bernoulli_reward_state(p: f64) -> TabularMdp {
    TabularMdp::new(
        1,
        1,
        vec![1, 2],
        vec![vec![vec![(1, 1.0)]], Vec::new()],
        vec![vec![RewardDist::bernoulli(p)], Vec::new()],
        StartDist::Deterministic { state: 0 },
    )
    .unwrap()
}

/// One state whose single action lands in one of three terminal states with
/// the given probabilities. Used by the goodness-of-fit reset tests.
pub fn three_outcome_state(probs: &[f64; 3]) -> TabularMdp {
    TabularMdp::new(
        1,
        1,
        vec![1, 2, 2, 2],
        vec![
            vec![vec![(1, probs[0]), (2, probs[1]), (3, probs[2])]],
            Vec::new(),
            Vec::new(),
            Vec::new(),
        ],
        vec![
            vec![RewardDist::Deterministic { value: 0.0 }],
            Vec::new(),
            Vec::new(),
            Vec::new(),
        ],
        StartDist::Deterministic { state: 0 },
    )
    .unwrap()
}

/// Uniform start over two states with `φ = e₁, e₂`.
pub fn uniform_start_pair() -> (TabularMdp, FeatureMap) {
    let mdp = TabularMdp::new(
        1,
        1,
        vec![1, 1, 2],
        vec![vec![vec![(2, 1.0)]], vec![vec![(2, 1.0)]], Vec::new()],
        vec![
            vec![RewardDist::Deterministic { value: 0.5 }],
            vec![RewardDist::Deterministic { value: 0.5 }],
            Vec::new(),
        ],
        StartDist::Categorical {
            probs: vec![(0, 0.5), (1, 0.5)],
        },
    )
    .unwrap();
    let fm = FeatureMap::one_hot(&mdp);
    (mdp, fm)
}

/// Four non-terminal states, two actions, H = 3; small enough to enumerate
/// every deterministic policy.
pub fn branching_example() -> TabularMdp {
    let det = |value| RewardDist::Deterministic { value };
    TabularMdp::new(
        3,
        2,
        vec![1, 2, 2, 3, 4],
        vec![
            vec![vec![(1, 1.0)], vec![(2, 1.0)]],
            vec![vec![(3, 1.0)], vec![(3, 1.0)]],
            vec![vec![(3, 1.0)], vec![(3, 1.0)]],
            vec![vec![(4, 1.0)], vec![(4, 1.0)]],
            Vec::new(),
        ],
        vec![
            vec![det(0.6), det(0.1)],
            vec![det(0.7), det(0.2)],
            vec![det(0.9), det(0.3)],
            vec![det(0.5), det(0.0)],
            Vec::new(),
        ],
        StartDist::Deterministic { state: 0 },
    )
    .unwrap()
}

/// Bundle a tabular MDP with one-hot features and a given expert policy.
pub fn realizable_one_hot(name: &str, mdp: TabularMdp, expert_policy: Vec<usize>) -> RealizableEnv {
    let table = exact::exact_value(&mdp, &expert_policy).unwrap();
    let features = FeatureMap::one_hot(&mdp);
    let theta_circ: Vec<f64> = (0..mdp.state_count())
        .filter(|&s| !mdp.is_terminal(s))
        .map(|s| table.v[s])
        .collect();
    let b_bound = norm2(&theta_circ);
    RealizableEnv {
        name: name.to_string(),
        mdp: Arc::new(mdp),
        features,
        expert_policy,
        theta_circ,
        b_bound,
        v_circ: table.v,
    }
}

// ---------------------------------------------------------------------------
// Deterministic suite
// ---------------------------------------------------------------------------

/// Deterministic realizable instance `i ∈ 0..10`: layered topologies with
/// `d ≤ 8` one-hot features, seeded deterministic rewards, and an expert
/// that is exactly optimal on even `i` and an arbitrary provided policy on
/// odd `i` (the guarantee is relative to the expert, not the optimum).
pub fn det_instance(i: usize) -> RealizableEnv {
    let patterns: [(u32, &[usize], usize); 10] = [
        (2, &[1, 2], 2),
        (3, &[1, 2, 2], 2),
        (3, &[1, 2, 2], 3),
        (4, &[1, 2, 2, 2], 2),
        (2, &[2, 3], 2),
        (4, &[1, 1, 2, 2], 3),
        (3, &[2, 2, 2], 2),
        (2, &[1, 3], 3),
        (4, &[2, 2, 2, 2], 2),
        (3, &[1, 3, 3], 3),
    ];
    let (h, widths, actions) = patterns[i % patterns.len()];
    let mut rng = seeded_rng(derive_seed(0xDE7, i as u64));

    let layout = Layout::new(h, widths);
    let n = layout.total;
    let mut transitions = vec![Vec::new(); n];
    let mut rewards = vec![Vec::new(); n];
    for s in 0..n {
        let layer = layout.layer_of[s] as usize;
        if layer == h as usize + 1 {
            continue;
        }
        let next_layer = layout.states_in(layer + 1);
        let mut t_rows = Vec::with_capacity(actions);
        let mut r_rows = Vec::with_capacity(actions);
        for _ in 0..actions {
            let succ = next_layer[rng.gen_range(0..next_layer.len())];
            t_rows.push(vec![(succ, 1.0)]);
            let value = rng.gen_range(0..10) as f64 / 10.0;
            r_rows.push(RewardDist::Deterministic { value });
        }
        transitions[s] = t_rows;
        rewards[s] = r_rows;
    }
    let mdp = TabularMdp::new(
        h,
        actions,
        layout.layer_of,
        transitions,
        rewards,
        StartDist::Deterministic { state: 0 },
    )
    .unwrap();

    let expert = if i % 2 == 0 {
        exact::exact_optimal(&mdp).0
    } else {
        (0..n)
            .map(|s| if mdp.is_terminal(s) { 0 } else { rng.gen_range(0..actions) })
            .collect()
    };
    realizable_one_hot(&format!("det-{i}"), mdp, expert)
}

// ---------------------------------------------------------------------------
// Stochastic suite
// ---------------------------------------------------------------------------

/// Stochastic realizable instance `i ∈ 0..5` (`|S| ≤ 8`, `H ≤ 4`, `A ≤ 3`).
///
/// The expert walks a high-reward path; non-expert actions pay small
/// Bernoulli rewards and drop into low-value sink chains. Instance 3 splits
/// the drop across two equal-value sinks (stochastic transitions); instance
/// 4 adds a deterministic mid-value decoy branch.
pub fn stochastic_instance(i: usize) -> RealizableEnv {
    match i % 5 {
        0 => ladder("stoch-0", 3, 2, &[0.8, 0.7, 0.9], LadderKind::Plain),
        1 => ladder("stoch-1", 4, 2, &[0.7, 0.8, 0.6, 0.9], LadderKind::Plain),
        2 => ladder("stoch-2", 3, 3, &[0.9, 0.6, 0.8], LadderKind::Plain),
        3 => ladder("stoch-3", 3, 2, &[0.8, 0.7, 0.9], LadderKind::SplitSinks),
        _ => ladder("stoch-4", 3, 3, &[0.9, 0.6, 0.8], LadderKind::Decoy),
    }
}

enum LadderKind {
    Plain,
    /// Non-expert actions land 50/50 in one of two sinks with equal values.
    SplitSinks,
    /// One extra deterministic branch with middling value off the start.
    Decoy,
}

fn ladder(name: &str, h: u32, actions: usize, path_rewards: &[f64], kind: LadderKind) -> RealizableEnv {
    assert_eq!(path_rewards.len(), h as usize);
    let det = |value| RewardDist::Deterministic { value };

    // State ids: good path g_1..g_H, then per-layer sinks, then the decoy
    // chain when present, then one terminal state.
    let mut layer_of = Vec::new();
    let mut names: Vec<(char, u32)> = Vec::new(); // (role, layer)
    for l in 1..=h {
        layer_of.push(l);
        names.push(('g', l));
    }
    let sink_chains: usize = match kind {
        LadderKind::SplitSinks => 2,
        _ => 1,
    };
    for chain in 0..sink_chains {
        for l in 2..=h {
            layer_of.push(l);
            names.push((if chain == 0 { 'b' } else { 'c' }, l));
        }
    }
    if matches!(kind, LadderKind::Decoy) {
        for l in 2..=h {
            layer_of.push(l);
            names.push(('m', l));
        }
    }
    layer_of.push(h + 1);
    names.push(('t', h + 1));
    let n = layer_of.len();
    let find = |role: char, layer: u32| -> StateId {
        names.iter().position(|&(r, l)| r == role && l == layer).unwrap()
    };
    let terminal = find('t', h + 1);
    let next_of = |role: char, layer: u32| -> StateId {
        if layer == h {
            terminal
        } else {
            find(role, layer + 1)
        }
    };

    let mut transitions = vec![Vec::new(); n];
    let mut rewards = vec![Vec::new(); n];
    for s in 0..n {
        let (role, layer) = names[s];
        if role == 't' {
            continue;
        }
        let mut t_rows = Vec::with_capacity(actions);
        let mut r_rows = Vec::with_capacity(actions);
        match role {
            'g' => {
                let expert_a = (layer as usize - 1) % actions;
                let decoy_a = (expert_a + 1) % actions;
                for a in 0..actions {
                    if a == expert_a {
                        t_rows.push(vec![(next_of('g', layer), 1.0)]);
                        r_rows.push(det(path_rewards[layer as usize - 1]));
                    } else if matches!(kind, LadderKind::Decoy) && layer == 1 && a == decoy_a {
                        t_rows.push(vec![(next_of('m', layer), 1.0)]);
                        r_rows.push(det(0.55));
                    } else {
                        match kind {
                            LadderKind::SplitSinks if layer < h => {
                                t_rows.push(vec![
                                    (next_of('b', layer), 0.5),
                                    (next_of('c', layer), 0.5),
                                ]);
                            }
                            _ => t_rows.push(vec![(next_of('b', layer), 1.0)]),
                        }
                        r_rows.push(RewardDist::bernoulli(0.05 + 0.05 * a as f64));
                    }
                }
            }
            'b' | 'c' | 'm' => {
                let (good_r, bad_mean) = if role == 'm' { (0.55, 0.1) } else { (0.1, 0.05) };
                for a in 0..actions {
                    if a == 0 {
                        t_rows.push(vec![(next_of(role, layer), 1.0)]);
                        r_rows.push(det(good_r));
                    } else {
                        let sink = if role == 'm' { 'b' } else { role };
                        t_rows.push(vec![(next_of(sink, layer), 1.0)]);
                        r_rows.push(RewardDist::bernoulli(bad_mean));
                    }
                }
            }
            _ => unreachable!(),
        }
        transitions[s] = t_rows;
        rewards[s] = r_rows;
    }
    let mdp = TabularMdp::new(
        h,
        actions,
        layer_of,
        transitions,
        rewards,
        StartDist::Deterministic { state: 0 },
    )
    .unwrap();
    let expert = exact::exact_optimal(&mdp).0;
    realizable_one_hot(name, mdp, expert)
}

// ---------------------------------------------------------------------------
// Action-value suite
// ---------------------------------------------------------------------------

/// Deterministic instance `i ∈ 0..3` with one-hot `(s, a)` features and
/// `θ° = q°` (realizable action values, deterministic dynamics).
pub fn q_instance(i: usize) -> QRealizableEnv {
    let patterns: [(u32, &[usize], usize); 3] =
        [(3, &[1, 2, 2], 2), (2, &[1, 2], 2), (3, &[1, 2, 1], 2)];
    let (h, widths, actions) = patterns[i % patterns.len()];
    let mut rng = seeded_rng(derive_seed(0xCAFE, i as u64));
    let layout = Layout::new(h, widths);
    let n = layout.total;
    let mut transitions = vec![Vec::new(); n];
    let mut rewards = vec![Vec::new(); n];
    for s in 0..n {
        let layer = layout.layer_of[s] as usize;
        if layer == h as usize + 1 {
            continue;
        }
        let next_layer = layout.states_in(layer + 1);
        let mut t_rows = Vec::with_capacity(actions);
        let mut r_rows = Vec::with_capacity(actions);
        for a in 0..actions {
            let succ = next_layer[(s + a) % next_layer.len()];
            t_rows.push(vec![(succ, 1.0)]);
            let value = rng.gen_range(0..10) as f64 / 10.0;
            r_rows.push(RewardDist::Deterministic { value });
        }
        transitions[s] = t_rows;
        rewards[s] = r_rows;
    }
    let mdp = TabularMdp::new(
        h,
        actions,
        layout.layer_of,
        transitions,
        rewards,
        StartDist::Deterministic { state: 0 },
    )
    .unwrap();
    let (expert, table) = exact::exact_optimal(&mdp);
    let q_features = QFeatureMap::one_hot(&mdp);
    let theta_circ: Vec<f64> = (0..n)
        .filter(|&s| !mdp.is_terminal(s))
        .flat_map(|s| table.q[s].clone())
        .collect();
    let b_bound = norm2(&theta_circ);
    QRealizableEnv {
        name: format!("q-{i}"),
        mdp: Arc::new(mdp),
        q_features,
        expert_policy: expert,
        theta_circ,
        b_bound,
        v_circ: table.v,
    }
}

struct Layout {
    layer_of: Vec<u32>,
    total: usize,
}

impl Layout {
    fn new(h: u32, widths: &[usize]) -> Self {
        assert_eq!(widths.len(), h as usize);
        let mut layer_of = Vec::new();
        for (idx, &w) in widths.iter().enumerate() {
            layer_of.extend(std::iter::repeat(idx as u32 + 1).take(w));
        }
        layer_of.push(h + 1); // single terminal state
        let total = layer_of.len();
        Self { layer_of, total }
    }

    fn states_in(&self, layer: usize) -> Vec<StateId> {
        (0..self.total)
            .filter(|&s| self.layer_of[s] as usize == layer)
            .collect()
    }
}
