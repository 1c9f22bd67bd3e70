//! The adversarial hypercube environment.
//!
//! A hidden vector `s★ ∈ {±1}^p` (with `p/4 ≤ ρ(1⃗, s★) ≤ 3p/4`) must be
//! found by flipping bits. Play proceeds in `K` phases of `p` steps each
//! (`H = K·p`). Within a phase each bit may be flipped at most once:
//! repeating an index within the first `p/4` steps of a phase kills the
//! game, repeating later freezes the state until the phase ends. Proximity
//! to `s★` is scored at phase ends only: a phase ending inside the open
//! `p/4`-neighborhood pays the geometrically decaying product reward and
//! moves play to the dead state `⊥`; reaching horizon `H` always pays a
//! Bernoulli reward with the same product mean. After `⊥`, play idles at
//! zero reward through the remaining layers.
//!
//! The expert flips the earliest unfixed index disagreeing with `s★`, and
//! freezes (repeats the earliest played index) when none remains. Its value
//! function is exactly linear in `1 + p + p²` features; the expert policy
//! itself is linear in `1 + p` state-action features. Both constructions
//! are built here, normalized so every feature norm is at most one, with
//! the scale recorded in [`HypercubeInstance::value_scale`].

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::norm2;
use crate::mdp::{
    FeatureMap, QFeatureMap, RewardDist, StartDist, StateId, TabularMdp,
};

#[derive(Debug, Error, PartialEq)]
pub enum HypercubeError {
    #[error("vectors must have equal length (got {0} and {1})")]
    DimensionError(usize, usize),
    #[error("p must be a positive multiple of 4 (got {0})")]
    BadDimension(usize),
    #[error("secret must satisfy p/4 ≤ ρ(1⃗, s★) ≤ 3p/4 (got ρ = {0})")]
    BadSecret(usize),
    #[error("action {0} out of range [0, {1})")]
    InvalidAction(usize, usize),
    #[error("no transition from a game-over state")]
    GameOver,
}

/// Hamming distance on `{±1}^p`: `ρ(x, y) = ½(p − ⟨x, y⟩)`.
pub fn hamming(x: &[i8], y: &[i8]) -> Result<usize, HypercubeError> {
    if x.len() != y.len() {
        return Err(HypercubeError::DimensionError(x.len(), y.len()));
    }
    Ok(x.iter().zip(y).filter(|(a, b)| a != b).count())
}

/// The score factor `g(x) = 1 − x/p`.
pub fn g_factor(distance: usize, p: usize) -> f64 {
    1.0 - distance as f64 / p as f64
}

/// A symbolic in-phase state. The phase-end history enters only through the
/// product of its `g` factors, kept exact as `hist_num / p^hist_len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HypercubeState {
    /// Completed phases, `0..K`.
    pub phase: u32,
    /// Steps taken inside the current phase, `0..p`.
    pub step: u32,
    pub current: Vec<i8>,
    pub phase_start: Vec<i8>,
    /// Bits played this phase (all bits once frozen).
    pub fixed: Vec<bool>,
    pub frozen: bool,
    /// Numerator of the exact history product `∏ g(s_{k−1}, s_k)`.
    pub hist_num: u64,
    pub hist_len: u32,
    pub game_over: bool,
}

impl HypercubeState {
    pub fn start(p: usize) -> Self {
        Self {
            phase: 0,
            step: 0,
            current: vec![1; p],
            phase_start: vec![1; p],
            fixed: vec![false; p],
            frozen: false,
            hist_num: 1,
            hist_len: 0,
            game_over: false,
        }
    }

    pub fn history_product(&self, p: usize) -> f64 {
        self.hist_num as f64 / (p as f64).powi(self.hist_len as i32)
    }

    /// Bits flipped so far this phase: `ρ(phase start, current)`.
    pub fn ct_flip(&self) -> usize {
        hamming(&self.phase_start, &self.current).unwrap()
    }

    /// The fix mask as 0/1, all ones when frozen.
    pub fn fix_mask(&self) -> Vec<f64> {
        self.fixed
            .iter()
            .map(|&f| if f || self.frozen { 1.0 } else { 0.0 })
            .collect()
    }
}

/// What a transition produced.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeStep {
    pub next: HypercubeState,
    /// Reward distribution emitted on this transition (zero elsewhere).
    pub reward: RewardDist,
}

/// One phase-step of the raw (unscaled) game dynamics.
pub fn hypercube_transition(
    state: &HypercubeState,
    action: usize,
    secret: &[i8],
    k_phases: u32,
) -> Result<HypercubeStep, HypercubeError> {
    let p = state.current.len();
    if action >= p {
        return Err(HypercubeError::InvalidAction(action, p));
    }
    if state.game_over {
        return Err(HypercubeError::GameOver);
    }
    let mut next = state.clone();
    let step_number = state.step as usize + 1; // 1-based index of this move
    let repeat = state.frozen || state.fixed[action];
    if repeat {
        if !state.frozen && step_number <= p / 4 {
            // Early repeat: dead immediately, no reward.
            next.game_over = true;
            next.step += 1;
            return Ok(HypercubeStep {
                next,
                reward: RewardDist::Deterministic { value: 0.0 },
            });
        }
        next.frozen = true;
    } else {
        next.current[action] = -next.current[action];
        next.fixed[action] = true;
    }
    next.step += 1;

    if next.step as usize == p {
        // Phase boundary: fold the phase factor into the history, score
        // proximity, and either stop or open the next phase.
        let dist_in_phase = hamming(&next.phase_start, &next.current)?;
        next.hist_num *= (p - dist_in_phase) as u64;
        next.hist_len += 1;
        next.phase += 1;
        next.step = 0;
        let dist_secret = hamming(&next.current, secret)?;
        let mean = next.history_product(p) * g_factor(dist_secret, p);
        let last_phase = next.phase == k_phases;
        let near = dist_secret < p / 4;
        if last_phase {
            next.game_over = true;
            return Ok(HypercubeStep {
                next,
                reward: RewardDist::bernoulli(mean),
            });
        }
        if near {
            next.game_over = true;
            return Ok(HypercubeStep {
                next,
                reward: RewardDist::Deterministic { value: mean },
            });
        }
        next.phase_start = next.current.clone();
        next.fixed = vec![false; p];
        next.frozen = false;
    }
    Ok(HypercubeStep {
        next,
        reward: RewardDist::Deterministic { value: 0.0 },
    })
}

/// Phase-history reward `r((s_i)) = (∏ g(s_{i−1}, s_i)) · g(s_k, s★)` for a
/// phase-end history `s_1..s_k` (the start `s_0 = 1⃗` is implicit).
pub fn hypercube_reward(history: &[Vec<i8>], secret: &[i8]) -> Result<f64, HypercubeError> {
    if secret.is_empty() {
        return Err(HypercubeError::BadDimension(0));
    }
    let p = secret.len();
    let mut prev: Vec<i8> = vec![1; p];
    let mut product = 1.0;
    for s in history {
        product *= g_factor(hamming(&prev, s)?, p);
        prev = s.clone();
    }
    Ok(product * g_factor(hamming(&prev, secret)?, p))
}

/// The expert rule: earliest unfixed index disagreeing with `s★`; if none
/// exists (or the state already matches `s★`), the earliest played index,
/// which freezes the phase.
pub fn hypercube_expert(state: &HypercubeState, secret: &[i8]) -> Result<usize, HypercubeError> {
    if state.game_over {
        return Err(HypercubeError::GameOver);
    }
    let p = state.current.len();
    if secret.len() != p {
        return Err(HypercubeError::DimensionError(secret.len(), p));
    }
    if !state.frozen {
        for j in 0..p {
            if !state.fixed[j] && state.current[j] != secret[j] {
                return Ok(j);
            }
        }
    }
    // Freeze: earliest fixed index (index 0 when the state is frozen).
    let mask = state.fix_mask();
    mask.iter()
        .position(|&f| f == 1.0)
        .ok_or(HypercubeError::GameOver)
}

/// Expert value in the raw game: history product times
/// `g(ct_flip + e^¬fix) · g(e^fix)`.
pub fn hypercube_value(state: &HypercubeState, secret: &[i8]) -> Result<f64, HypercubeError> {
    if state.game_over {
        return Ok(0.0);
    }
    let p = state.current.len();
    let (e_fix, e_unfix) = disagreement_split(state, secret)?;
    Ok(state.history_product(p)
        * g_factor(state.ct_flip() + e_unfix, p)
        * g_factor(e_fix, p))
}

/// Disagreements with the secret split by the fix mask: `(e^fix, e^¬fix)`.
fn disagreement_split(
    state: &HypercubeState,
    secret: &[i8],
) -> Result<(usize, usize), HypercubeError> {
    if secret.len() != state.current.len() {
        return Err(HypercubeError::DimensionError(secret.len(), state.current.len()));
    }
    let mask = state.fix_mask();
    let mut e_fix = 0;
    let mut e_unfix = 0;
    for j in 0..secret.len() {
        if state.current[j] != secret[j] {
            if mask[j] == 1.0 {
                e_fix += 1;
            } else {
                e_unfix += 1;
            }
        }
    }
    Ok((e_fix, e_unfix))
}

/// Raw (unnormalized) value features of dimension `1 + p + p²`.
///
/// With `a' = 1 − ⟨1⃗,fix⟩/(2p)`, `c' = 1 − (ct + ⟨1⃗,¬fix⟩/2)/p`,
/// `b̄ = (fix·s)/(2√p)`, `d̄ = (¬fix·s)/(2√p)`, the expert value factors as
/// `hist · (a' + ⟨b̄, s̄★⟩)(c' + ⟨d̄, s̄★⟩)`, giving the feature block
/// `hist · (a'c' ⊕ (c'b̄ + a'd̄) ⊕ (b̄ ⊗ d̄))` against the parameter
/// `1 ⊕ s̄★ ⊕ (s̄★ ⊗ s̄★)` with `s̄★ = s★/√p`.
pub fn hypercube_value_features_raw(state: &HypercubeState, p: usize) -> Vec<f64> {
    let dim = 1 + p + p * p;
    if state.game_over {
        return vec![0.0; dim];
    }
    let sqrt_p = (p as f64).sqrt();
    let mask = state.fix_mask();
    let fix_total: f64 = mask.iter().sum();
    let a = 0.5 * fix_total;
    let c = state.ct_flip() as f64 + 0.5 * (p as f64 - fix_total);
    let a_prime = 1.0 - a / p as f64;
    let c_prime = 1.0 - c / p as f64;
    let b_bar: Vec<f64> = (0..p)
        .map(|j| 0.5 * mask[j] * state.current[j] as f64 / sqrt_p)
        .collect();
    let d_bar: Vec<f64> = (0..p)
        .map(|j| 0.5 * (1.0 - mask[j]) * state.current[j] as f64 / sqrt_p)
        .collect();
    let hist = state.history_product(p);
    let mut phi = Vec::with_capacity(dim);
    phi.push(hist * a_prime * c_prime);
    for j in 0..p {
        phi.push(hist * (c_prime * b_bar[j] + a_prime * d_bar[j]));
    }
    for i in 0..p {
        for j in 0..p {
            phi.push(hist * b_bar[i] * d_bar[j]);
        }
    }
    phi
}

/// The matching value parameter `θ_v = 1 ⊕ s̄★ ⊕ (s̄★ ⊗ s̄★)`, `‖θ_v‖ = √3`.
pub fn hypercube_value_param(secret: &[i8]) -> Vec<f64> {
    let p = secret.len();
    let sqrt_p = (p as f64).sqrt();
    let s_bar: Vec<f64> = secret.iter().map(|&v| v as f64 / sqrt_p).collect();
    let mut theta = Vec::with_capacity(1 + p + p * p);
    theta.push(1.0);
    theta.extend(s_bar.iter());
    for i in 0..p {
        for j in 0..p {
            theta.push(s_bar[i] * s_bar[j]);
        }
    }
    theta
}

/// Policy features `φ_π(s, a) = (p ⊕ w') / √(p² + p)` where `w'` is the
/// vector the environment would move to: the bit flip when `a` is free, the
/// state itself when `a` repeats. Against `θ_π = 1 ⊕ s★` the argmax over
/// actions (lowest index on ties) reproduces the expert everywhere.
pub fn hypercube_policy_features(
    state: &HypercubeState,
    action: usize,
) -> Result<Vec<f64>, HypercubeError> {
    let p = state.current.len();
    if action >= p {
        return Err(HypercubeError::InvalidAction(action, p));
    }
    if state.game_over {
        return Ok(vec![0.0; 1 + p]);
    }
    let mask = state.fix_mask();
    let mut w = state.current.clone();
    if mask[action] == 0.0 {
        w[action] = -w[action];
    }
    let norm = ((p * p + p) as f64).sqrt();
    let mut phi = Vec::with_capacity(1 + p);
    phi.push(p as f64 / norm);
    phi.extend(w.iter().map(|&v| v as f64 / norm));
    Ok(phi)
}

/// `θ_π = 1 ⊕ s★`.
pub fn hypercube_policy_param(secret: &[i8]) -> Vec<f64> {
    let mut theta = Vec::with_capacity(1 + secret.len());
    theta.push(1.0);
    theta.extend(secret.iter().map(|&v| v as f64));
    theta
}

// ---------------------------------------------------------------------------
// Enumerated instance
// ---------------------------------------------------------------------------

/// Configuration of one instance.
#[derive(Debug, Clone)]
pub struct HypercubeConfig {
    pub p: usize,
    pub k_phases: u32,
    pub secret: Vec<i8>,
}

impl HypercubeConfig {
    pub fn new(p: usize, k_phases: u32, secret: Vec<i8>) -> Result<Self, HypercubeError> {
        if p == 0 || p % 4 != 0 {
            return Err(HypercubeError::BadDimension(p));
        }
        if secret.len() != p {
            return Err(HypercubeError::DimensionError(secret.len(), p));
        }
        let rho = hamming(&vec![1; p], &secret)?;
        if rho < p / 4 || rho > 3 * p / 4 {
            return Err(HypercubeError::BadSecret(rho));
        }
        Ok(Self { p, k_phases, secret })
    }
}

/// A fully enumerated instance: the tabular MDP (rewards scaled into the
/// feature geometry), both feature constructions, the expert table, and the
/// symbolic state behind every state id.
#[derive(Debug, Clone)]
pub struct HypercubeInstance {
    pub config: HypercubeConfig,
    pub mdp: Arc<TabularMdp>,
    pub states: Vec<HypercubeState>,
    pub value_features: FeatureMap,
    pub theta_v: Vec<f64>,
    pub policy_features: QFeatureMap,
    pub theta_pi: Vec<f64>,
    /// Rewards and values are the raw game's divided by this constant, which
    /// normalizes `sup ‖φ_v‖` to at most one.
    pub value_scale: f64,
    pub expert_policy: Vec<usize>,
}

impl HypercubeInstance {
    /// Enumerate all states reachable from the all-ones start.
    pub fn build(config: HypercubeConfig) -> Result<Self, HypercubeError> {
        let p = config.p;
        let horizon = config.k_phases * p as u32;
        let start = HypercubeState::start(p);

        let mut states: Vec<HypercubeState> = vec![start.clone()];
        let mut index: HashMap<HypercubeState, StateId> = HashMap::new();
        index.insert(start, 0);
        // Per-state action rows (successor, reward on that edge), filled by
        // breadth-first expansion in id order.
        let mut edges: Vec<Vec<(StateId, RewardDist)>> = Vec::new();
        let mut next_unexpanded = 0usize;
        while next_unexpanded < states.len() {
            let sid = next_unexpanded;
            next_unexpanded += 1;
            let state = states[sid].clone();
            let layer_steps = state.phase * p as u32 + state.step;
            if layer_steps >= horizon {
                edges.push(Vec::new());
                continue;
            }
            let mut rows = Vec::with_capacity(p);
            for a in 0..p {
                let step = if state.game_over {
                    // ⊥ idles forward at zero reward.
                    let mut next = state.clone();
                    next.step += 1;
                    if next.step as usize == p {
                        next.step = 0;
                        next.phase += 1;
                    }
                    HypercubeStep {
                        next,
                        reward: RewardDist::Deterministic { value: 0.0 },
                    }
                } else {
                    hypercube_transition(&state, a, &config.secret, config.k_phases)?
                };
                let next_id = match index.get(&step.next) {
                    Some(&id) => id,
                    None => {
                        let id = states.len();
                        index.insert(step.next.clone(), id);
                        states.push(step.next.clone());
                        id
                    }
                };
                rows.push((next_id, step.reward));
            }
            edges.push(rows);
        }

        // Feature normalization: one pass to find the raw sup norm.
        let mut value_scale: f64 = 1.0;
        for state in &states {
            value_scale = value_scale.max(norm2(&hypercube_value_features_raw(state, p)));
        }

        let n = states.len();
        let layer_of: Vec<u32> = states
            .iter()
            .map(|s| (s.phase * p as u32 + s.step).min(horizon) + 1)
            .collect();
        let mut transitions = vec![Vec::new(); n];
        let mut rewards = vec![Vec::new(); n];
        for (sid, rows) in edges.iter().enumerate() {
            if layer_of[sid] == horizon + 1 || rows.is_empty() {
                continue;
            }
            let mut t_rows = Vec::with_capacity(p);
            let mut r_rows = Vec::with_capacity(p);
            for &(next_id, reward) in rows {
                t_rows.push(vec![(next_id, 1.0)]);
                r_rows.push(match reward {
                    RewardDist::Deterministic { value } => RewardDist::Deterministic {
                        value: value / value_scale,
                    },
                    RewardDist::TwoPoint { p: prob, hi } => RewardDist::TwoPoint {
                        p: prob,
                        hi: hi / value_scale,
                    },
                });
            }
            transitions[sid] = t_rows;
            rewards[sid] = r_rows;
        }
        let mdp = TabularMdp::new(
            horizon,
            p,
            layer_of.clone(),
            transitions,
            rewards,
            StartDist::Deterministic { state: 0 },
        )
        .expect("enumerated hypercube tables are well-formed");

        // Scaled value features: terminal layer forced to zero (entering it
        // ends the game, consistent with zero continuation value).
        let v_dim = 1 + p + p * p;
        let v_table: Vec<Vec<f64>> = states
            .iter()
            .enumerate()
            .map(|(sid, s)| {
                if layer_of[sid] == horizon + 1 {
                    vec![0.0; v_dim]
                } else {
                    let mut phi = hypercube_value_features_raw(s, p);
                    for v in phi.iter_mut() {
                        *v /= value_scale;
                    }
                    phi
                }
            })
            .collect();
        let value_features =
            FeatureMap::new(&mdp, v_dim, v_table).expect("value features are normalized");

        let pi_dim = 1 + p;
        let pi_table: Vec<Vec<Vec<f64>>> = states
            .iter()
            .enumerate()
            .map(|(sid, s)| {
                if layer_of[sid] == horizon + 1 {
                    vec![vec![0.0; pi_dim]]
                } else if s.game_over {
                    vec![vec![0.0; pi_dim]; p]
                } else {
                    (0..p)
                        .map(|a| hypercube_policy_features(s, a).unwrap())
                        .collect()
                }
            })
            .collect();
        let policy_features =
            QFeatureMap::new(&mdp, pi_dim, pi_table).expect("policy features are normalized");

        let expert_policy: Vec<usize> = states
            .iter()
            .enumerate()
            .map(|(sid, s)| {
                if layer_of[sid] == horizon + 1 || s.game_over {
                    0
                } else {
                    hypercube_expert(s, &config.secret).unwrap()
                }
            })
            .collect();

        Ok(Self {
            theta_v: hypercube_value_param(&config.secret),
            theta_pi: hypercube_policy_param(&config.secret),
            config,
            mdp: Arc::new(mdp),
            states,
            value_features,
            policy_features,
            value_scale,
            expert_policy,
        })
    }

    /// Expert value of a state in the *scaled* environment.
    pub fn scaled_value(&self, sid: StateId) -> Result<f64, HypercubeError> {
        Ok(hypercube_value(&self.states[sid], &self.config.secret)? / self.value_scale)
    }

    /// All admissible secrets for dimension `p`.
    pub fn admissible_secrets(p: usize) -> Vec<Vec<i8>> {
        let mut out = Vec::new();
        for mask in 0u32..(1 << p) {
            let rho = mask.count_ones() as usize;
            if rho < p / 4 || rho > 3 * p / 4 {
                continue;
            }
            out.push((0..p).map(|j| if mask & (1 << j) != 0 { -1 } else { 1 }).collect());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    #[test]
    fn hamming_basics() {
        assert_eq!(hamming(&[1, 1, 1, 1], &[1, 1, 1, 1]).unwrap(), 0);
        assert_eq!(hamming(&[1, 1, 1, 1], &[-1, -1, -1, -1]).unwrap(), 4);
        assert_eq!(hamming(&[1, 1, -1, 1], &[1, -1, -1, -1]).unwrap(), 2);
        assert!(matches!(
            hamming(&[1, 1], &[1]),
            Err(HypercubeError::DimensionError(2, 1))
        ));
        // Bilinear identity ρ = ½(p − ⟨x, y⟩).
        let x = [1i8, -1, 1, -1, 1, 1, -1, 1];
        let y = [1i8, 1, -1, -1, 1, -1, -1, 1];
        let inner: i32 = x.iter().zip(y.iter()).map(|(&a, &b)| a as i32 * b as i32).sum();
        assert_eq!(
            hamming(&x, &y).unwrap(),
            ((x.len() as i32 - inner) / 2) as usize
        );
    }

    #[test]
    fn fresh_flip_sets_fix_mask() {
        let state = HypercubeState::start(4);
        let secret = vec![-1, -1, 1, 1];
        let step = hypercube_transition(&state, 1, &secret, 2).unwrap();
        assert_eq!(step.next.current, vec![1, -1, 1, 1]);
        assert!(step.next.fixed[1]);
        assert_eq!(step.next.step, 1);
    }

    #[test]
    fn early_repeat_kills_late_repeat_freezes() {
        // p = 8 so the death window covers the first two steps.
        let p = 8;
        let secret: Vec<i8> = (0..p).map(|j| if j < 4 { -1 } else { 1 }).collect();
        let mut state = HypercubeState::start(p);
        state = hypercube_transition(&state, 2, &secret, 2).unwrap().next;
        // Repeat at step 2 (within the first p/4 = 2 steps): dead.
        let dead = hypercube_transition(&state, 2, &secret, 2).unwrap().next;
        assert!(dead.game_over);
        // Fresh walk: repeat at step 7 of 8 freezes until phase end.
        let mut state = HypercubeState::start(p);
        for a in 0..6 {
            state = hypercube_transition(&state, a, &secret, 2).unwrap().next;
        }
        let frozen = hypercube_transition(&state, 0, &secret, 2).unwrap().next;
        assert!(frozen.frozen && !frozen.game_over);
        assert_eq!(frozen.current, state.current);
        // Frozen through the phase end; the vector never changes again.
        let end = hypercube_transition(&frozen, 3, &secret, 2).unwrap().next;
        assert_eq!(end.current, state.current);
    }

    #[test]
    fn reward_examples() {
        // Empty history, ρ(1⃗, s★) = p/2: value g(p/2) = ½.
        let secret = vec![-1, -1, 1, 1];
        assert_eq!(hypercube_reward(&[], &secret).unwrap(), 0.5);
        // One phase with ρ(s₀, s₁) = p/4 landing exactly on s★: ¾ · 1.
        let secret = vec![-1, 1, 1, 1];
        assert_eq!(hypercube_reward(&[secret.clone()], &secret).unwrap(), 0.75);
        assert!(matches!(
            hypercube_reward(&[], &[]),
            Err(HypercubeError::BadDimension(0))
        ));
    }

    #[test]
    fn expert_rule_examples() {
        let p = 8;
        let mut state = HypercubeState::start(p);
        // Disagreements at indices 2 and 5, none fixed: earliest wins.
        let mut secret = vec![1i8; p];
        secret[2] = -1;
        secret[5] = -1;
        assert_eq!(hypercube_expert(&state, &secret).unwrap(), 2);
        // All disagreeing indices fixed: freeze by the earliest played one.
        state = hypercube_transition(&state, 2, &secret, 2).unwrap().next;
        state = hypercube_transition(&state, 5, &secret, 2).unwrap().next;
        // Now current == secret: earliest played index is 2.
        assert_eq!(hypercube_expert(&state, &secret).unwrap(), 2);
    }

    #[test]
    fn value_features_dimension_and_norms() {
        let p = 4;
        let config = HypercubeConfig::new(p, 2, vec![-1, -1, 1, 1]).unwrap();
        let inst = HypercubeInstance::build(config).unwrap();
        assert_eq!(inst.theta_v.len(), 1 + p + p * p); // 21 for p = 4
        assert!((norm2(&inst.theta_v) - 3f64.sqrt()).abs() < 1e-12);
        for sid in 0..inst.mdp.state_count() {
            let phi = inst.value_features.features(sid).unwrap();
            assert!(norm2(phi) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn linearity_holds_on_every_reachable_state() {
        let p = 4;
        for secret in [vec![-1, -1, 1, 1], vec![-1, 1, 1, 1], vec![-1, -1, -1, 1]] {
            let inst =
                HypercubeInstance::build(HypercubeConfig::new(p, 2, secret).unwrap()).unwrap();
            for sid in 0..inst.mdp.state_count() {
                if inst.mdp.is_terminal(sid) || inst.states[sid].game_over {
                    continue;
                }
                let phi = inst.value_features.features(sid).unwrap();
                let predicted = dot(phi, &inst.theta_v);
                let expected = inst.scaled_value(sid).unwrap();
                assert!(
                    (predicted - expected).abs() <= 1e-9,
                    "state {sid}: ⟨φ,θ⟩ = {predicted} vs v° = {expected}"
                );
            }
        }
    }

    #[test]
    fn policy_argmax_matches_expert_everywhere() {
        let p = 4;
        let secret = vec![-1, 1, 1, 1];
        let inst =
            HypercubeInstance::build(HypercubeConfig::new(p, 2, secret).unwrap()).unwrap();
        for sid in 0..inst.mdp.state_count() {
            if inst.mdp.is_terminal(sid) || inst.states[sid].game_over {
                continue;
            }
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for a in 0..p {
                let phi = inst.policy_features.features(sid, a).unwrap();
                let score = dot(phi, &inst.theta_pi);
                if score > best_score {
                    best_score = score;
                    best = a;
                }
            }
            assert_eq!(
                best, inst.expert_policy[sid],
                "argmax disagrees with the expert at state {sid}"
            );
        }
    }

    #[test]
    fn fresh_start_argmax_is_the_earliest_disagreement() {
        let state = HypercubeState::start(4);
        let secret = vec![-1, 1, 1, 1];
        let theta = hypercube_policy_param(&secret);
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for a in 0..4 {
            let phi = hypercube_policy_features(&state, a).unwrap();
            let score = dot(&phi, &theta);
            if score > best_score {
                best_score = score;
                best = a;
            }
        }
        assert_eq!(best, 0);
        assert_eq!(hypercube_expert(&state, &secret).unwrap(), 0);
    }

    #[test]
    fn bad_secrets_rejected() {
        assert!(matches!(
            HypercubeConfig::new(4, 2, vec![1, 1, 1, 1]),
            Err(HypercubeError::BadSecret(0))
        ));
        assert!(matches!(
            HypercubeConfig::new(4, 2, vec![-1, -1, -1, -1]),
            Err(HypercubeError::BadSecret(4))
        ));
        assert!(matches!(
            HypercubeConfig::new(6, 2, vec![-1, 1, 1, 1, 1, 1]),
            Err(HypercubeError::BadDimension(6))
        ));
    }

    #[test]
    fn linearity_and_argmax_hold_symbolically_at_larger_p() {
        // No enumeration: random legal walks at p = 8 and p = 12, checking
        // the raw-feature identity ⟨φ_v, θ_v⟩ = v° and the policy argmax
        // against the expert rule at every visited state.
        use rand::Rng;
        let mut rng = crate::rng::seeded_rng(31);
        for &p in &[8usize, 12] {
            let k_phases = 2;
            for _ in 0..40 {
                // Draw an admissible secret.
                let secret: Vec<i8> = loop {
                    let cand: Vec<i8> =
                        (0..p).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
                    let rho = hamming(&vec![1; p], &cand).unwrap();
                    if rho >= p / 4 && rho <= 3 * p / 4 {
                        break cand;
                    }
                };
                let theta_v = hypercube_value_param(&secret);
                let theta_pi = hypercube_policy_param(&secret);
                let mut state = HypercubeState::start(p);
                for _ in 0..(k_phases * p as u32) {
                    if state.game_over {
                        break;
                    }
                    let predicted = crate::linalg::dot(
                        &hypercube_value_features_raw(&state, p),
                        &theta_v,
                    );
                    let value = hypercube_value(&state, &secret).unwrap();
                    assert!(
                        (predicted - value).abs() <= 1e-9,
                        "p={p}: ⟨φ,θ⟩ = {predicted} vs v° = {value}"
                    );
                    let mut best = 0usize;
                    let mut best_score = f64::NEG_INFINITY;
                    for a in 0..p {
                        let score = crate::linalg::dot(
                            &hypercube_policy_features(&state, a).unwrap(),
                            &theta_pi,
                        );
                        if score > best_score {
                            best_score = score;
                            best = a;
                        }
                    }
                    assert_eq!(best, hypercube_expert(&state, &secret).unwrap());
                    // Mostly follow the expert; sometimes wander.
                    let action = if rng.gen::<f64>() < 0.3 {
                        rng.gen_range(0..p)
                    } else {
                        best
                    };
                    state = hypercube_transition(&state, action, &secret, k_phases)
                        .unwrap()
                        .next;
                }
            }
        }
    }

    #[test]
    fn geometric_decay_of_phase_factors() {
        // Every completed phase contributes a factor ≤ 3/4.
        let p = 4;
        let secret = vec![-1, -1, 1, 1];
        let inst =
            HypercubeInstance::build(HypercubeConfig::new(p, 2, secret).unwrap()).unwrap();
        for s in &inst.states {
            if s.hist_len > 0 {
                assert!(
                    s.history_product(p) <= 0.75f64.powi(s.hist_len as i32) + 1e-12,
                    "history product {} too large for {} phases",
                    s.history_product(p),
                    s.hist_len
                );
            }
        }
    }
}
