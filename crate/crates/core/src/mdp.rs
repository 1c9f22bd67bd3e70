//! Episodic finite-horizon MDP simulator with checkpoint resets.
//!
//! States are partitioned by horizon index `h ∈ {1..H}` plus an absorbing
//! terminal layer `H+1`. The simulator supports three motions:
//!
//! - [`MdpSim::step`] — play an action, observe `(reward, next state)`,
//!   remember the pre-step state as a checkpoint, and count one sample;
//! - [`MdpSim::reset_to_checkpoint`] — return to the most recently left
//!   state without consuming a sample (checkpoint depth is exactly one);
//! - [`MdpSim::restart`] — begin a fresh episode from the start
//!   distribution, clearing the checkpoint.
//!
//! All shipped environments are tabular: finite per-layer state sets with
//! explicit transition and reward tables, which is what makes the exact
//! value oracles in [`crate::exact`] possible. Tabular environments can be
//! read from / written to a JSON document (see [`TabularMdpSpec`]).

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::norm2;
use crate::rng;

/// Index into a [`TabularMdp`]'s flat state table.
pub type StateId = usize;

/// A state handle: opaque identifier plus its horizon layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub id: StateId,
    /// Horizon index in `{1..H+1}`; `H+1` is the terminal layer.
    pub horizon: u32,
}

/// Errors from the simulator and feature maps.
#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("cannot step from a terminal-layer state (id {0})")]
    TerminalStep(StateId),
    #[error("action {action} out of range for {actions} actions")]
    InvalidAction { action: usize, actions: usize },
    #[error("no checkpoint available (no step since the last restart)")]
    NoCheckpoint,
    #[error("unknown state id {0}")]
    UnknownState(StateId),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
}

/// Reward distribution at a `(state, action)` pair. Support must lie in
/// `[0, 1]` for simulator-facing environments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RewardDist {
    /// Always pays `value`.
    Deterministic { value: f64 },
    /// Pays `hi` with probability `p`, else 0. Plain Bernoulli is `hi = 1`.
    TwoPoint { p: f64, hi: f64 },
}

impl RewardDist {
    pub fn bernoulli(p: f64) -> Self {
        RewardDist::TwoPoint { p, hi: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            RewardDist::Deterministic { value } => value,
            RewardDist::TwoPoint { p, hi } => p * hi,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match *self {
            RewardDist::Deterministic { .. } => true,
            RewardDist::TwoPoint { p, .. } => p == 0.0 || p == 1.0,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            RewardDist::Deterministic { value } => value,
            RewardDist::TwoPoint { p, hi } => {
                if rng.gen::<f64>() < p {
                    hi
                } else {
                    0.0
                }
            }
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            RewardDist::Deterministic { value } => (value, value),
            RewardDist::TwoPoint { p, hi } => {
                if p == 0.0 {
                    (0.0, 0.0)
                } else {
                    (hi.min(0.0), hi.max(0.0))
                }
            }
        }
    }
}

/// Start-state distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StartDist {
    Deterministic { state: StateId },
    Categorical { probs: Vec<(StateId, f64)> },
}

impl StartDist {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, StartDist::Deterministic { .. })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> StateId {
        match self {
            StartDist::Deterministic { state } => *state,
            StartDist::Categorical { probs } => sample_categorical(probs, rng),
        }
    }
}

fn sample_categorical(probs: &[(StateId, f64)], rng: &mut ChaCha8Rng) -> StateId {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(s, p) in probs {
        acc += p;
        if u < acc {
            return s;
        }
    }
    probs.last().expect("empty categorical").0
}

/// A finite-horizon tabular MDP.
///
/// States are indexed `0..n` and carry a horizon layer in `1..=H+1`. Every
/// non-terminal state has one transition row per action; terminal states
/// have none.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    horizon: u32,
    action_count: usize,
    layer_of: Vec<u32>,
    /// `transitions[s][a]` = sparse probability vector over successors.
    transitions: Vec<Vec<Vec<(StateId, f64)>>>,
    rewards: Vec<Vec<RewardDist>>,
    start: StartDist,
}

impl TabularMdp {
    /// Build and validate an environment. Rewards outside `[0,1]` are
    /// rejected here rather than clamped; clamping belongs to the
    /// inaccurate-simulator wrapper.
    pub fn new(
        horizon: u32,
        action_count: usize,
        layer_of: Vec<u32>,
        transitions: Vec<Vec<Vec<(StateId, f64)>>>,
        rewards: Vec<Vec<RewardDist>>,
        start: StartDist,
    ) -> Result<Self, MdpError> {
        let mdp = Self::new_unbounded(horizon, action_count, layer_of, transitions, rewards, start)?;
        for s in 0..mdp.state_count() {
            if mdp.is_terminal(s) {
                continue;
            }
            for a in 0..mdp.action_count {
                let (lo, hi) = mdp.rewards[s][a].bounds();
                if lo < 0.0 || hi > 1.0 {
                    return Err(MdpError::InvalidEnvironment(format!(
                        "reward support [{lo}, {hi}] at state {s} action {a} leaves [0,1]"
                    )));
                }
            }
        }
        Ok(mdp)
    }

    /// Like [`TabularMdp::new`] but without the `[0,1]` reward-range check.
    ///
    /// Exists only for diagnostic fixtures (the binary-tree counterexample
    /// uses rewards in `{-1,+1}`). Such environments are evaluated exactly,
    /// never simulated by the learner.
    pub fn new_unbounded(
        horizon: u32,
        action_count: usize,
        layer_of: Vec<u32>,
        transitions: Vec<Vec<Vec<(StateId, f64)>>>,
        rewards: Vec<Vec<RewardDist>>,
        start: StartDist,
    ) -> Result<Self, MdpError> {
        if horizon == 0 || action_count == 0 {
            return Err(MdpError::InvalidEnvironment(
                "horizon and action count must be positive".into(),
            ));
        }
        let n = layer_of.len();
        if transitions.len() != n || rewards.len() != n {
            return Err(MdpError::InvalidEnvironment(
                "transition/reward tables must cover every state".into(),
            ));
        }
        for (s, &h) in layer_of.iter().enumerate() {
            if h == 0 || h > horizon + 1 {
                return Err(MdpError::InvalidEnvironment(format!(
                    "state {s} has horizon index {h}, want 1..={}",
                    horizon + 1
                )));
            }
            let terminal = h == horizon + 1;
            if terminal {
                if !transitions[s].is_empty() {
                    return Err(MdpError::InvalidEnvironment(format!(
                        "terminal state {s} must have no transitions"
                    )));
                }
                continue;
            }
            if transitions[s].len() != action_count || rewards[s].len() != action_count {
                return Err(MdpError::InvalidEnvironment(format!(
                    "state {s} must have one row per action"
                )));
            }
            for a in 0..action_count {
                let row = &transitions[s][a];
                if row.is_empty() {
                    return Err(MdpError::InvalidEnvironment(format!(
                        "empty successor row at state {s} action {a}"
                    )));
                }
                let mut total = 0.0;
                for &(succ, p) in row {
                    if succ >= n {
                        return Err(MdpError::InvalidEnvironment(format!(
                            "successor {succ} out of range at state {s}"
                        )));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return Err(MdpError::InvalidEnvironment(format!(
                            "probability {p} out of range at state {s} action {a}"
                        )));
                    }
                    if layer_of[succ] != h + 1 {
                        return Err(MdpError::InvalidEnvironment(format!(
                            "successor {succ} of state {s} skips layers ({} -> {})",
                            h, layer_of[succ]
                        )));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(MdpError::InvalidEnvironment(format!(
                        "probabilities at state {s} action {a} sum to {total}"
                    )));
                }
            }
        }
        Ok(Self {
            horizon,
            action_count,
            layer_of,
            transitions,
            rewards,
            start,
        })
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn state_count(&self) -> usize {
        self.layer_of.len()
    }

    pub fn layer(&self, s: StateId) -> u32 {
        self.layer_of[s]
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.layer_of[s] == self.horizon + 1
    }

    pub fn state(&self, s: StateId) -> State {
        State {
            id: s,
            horizon: self.layer_of[s],
        }
    }

    pub fn start_dist(&self) -> &StartDist {
        &self.start
    }

    /// Sparse successor distribution at `(s, a)`.
    pub fn successors(&self, s: StateId, a: usize) -> &[(StateId, f64)] {
        &self.transitions[s][a]
    }

    pub fn reward(&self, s: StateId, a: usize) -> RewardDist {
        self.rewards[s][a]
    }

    /// True iff every transition and reward in the table is deterministic.
    pub fn is_deterministic(&self) -> bool {
        (0..self.state_count()).filter(|&s| !self.is_terminal(s)).all(|s| {
            (0..self.action_count).all(|a| {
                self.transitions[s][a].len() == 1 && self.rewards[s][a].is_deterministic()
            })
        })
    }

    /// States in layer `h`.
    pub fn layer_states(&self, h: u32) -> impl Iterator<Item = StateId> + '_ {
        (0..self.state_count()).filter(move |&s| self.layer_of[s] == h)
    }
}

/// A state-feature map `φ: S → R^d` with `‖φ(s)‖₂ ≤ 1` and `φ ≡ 0` on the
/// terminal layer (the zero terminal convention is what makes the telescoped
/// value identity hold without correction terms).
#[derive(Debug, Clone)]
pub struct FeatureMap {
    dim: usize,
    table: Vec<Vec<f64>>,
}

impl FeatureMap {
    pub fn new(mdp: &TabularMdp, dim: usize, table: Vec<Vec<f64>>) -> Result<Self, MdpError> {
        if table.len() != mdp.state_count() {
            return Err(MdpError::InvalidEnvironment(
                "feature table must cover every state".into(),
            ));
        }
        for (s, row) in table.iter().enumerate() {
            if row.len() != dim {
                return Err(MdpError::InvalidEnvironment(format!(
                    "feature vector at state {s} has length {}, want {dim}",
                    row.len()
                )));
            }
            if norm2(row) > 1.0 + 1e-9 {
                return Err(MdpError::InvalidEnvironment(format!(
                    "feature norm {} > 1 at state {s}",
                    norm2(row)
                )));
            }
            if mdp.is_terminal(s) && row.iter().any(|&v| v != 0.0) {
                return Err(MdpError::InvalidEnvironment(format!(
                    "terminal state {s} must have zero features"
                )));
            }
        }
        Ok(Self { dim, table })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self, s: StateId) -> Result<&[f64], MdpError> {
        self.table.get(s).map(Vec::as_slice).ok_or(MdpError::UnknownState(s))
    }

    /// One-hot features over the non-terminal states of `mdp` (`d = |S|`
    /// minus the terminal layer). Any value function is exactly linear in
    /// these, with the value table itself as parameter.
    pub fn one_hot(mdp: &TabularMdp) -> Self {
        let non_terminal: Vec<StateId> =
            (0..mdp.state_count()).filter(|&s| !mdp.is_terminal(s)).collect();
        let dim = non_terminal.len();
        let mut table = vec![vec![0.0; dim]; mdp.state_count()];
        for (j, &s) in non_terminal.iter().enumerate() {
            table[s][j] = 1.0;
        }
        Self { dim, table }
    }

}

/// A state-action feature map `φ: S × A → R^d` for the action-value variant.
/// Terminal states map to zero regardless of action.
#[derive(Debug, Clone)]
pub struct QFeatureMap {
    dim: usize,
    /// `table[s][a]`; terminal states hold a single zero row.
    table: Vec<Vec<Vec<f64>>>,
}

impl QFeatureMap {
    pub fn new(
        mdp: &TabularMdp,
        dim: usize,
        table: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, MdpError> {
        if table.len() != mdp.state_count() {
            return Err(MdpError::InvalidEnvironment(
                "q-feature table must cover every state".into(),
            ));
        }
        for (s, rows) in table.iter().enumerate() {
            let want = if mdp.is_terminal(s) { 1 } else { mdp.action_count() };
            if rows.len() != want {
                return Err(MdpError::InvalidEnvironment(format!(
                    "q-feature table at state {s} has {} rows, want {want}",
                    rows.len()
                )));
            }
            for row in rows {
                if row.len() != dim || norm2(row) > 1.0 + 1e-9 {
                    return Err(MdpError::InvalidEnvironment(format!(
                        "bad q-feature vector at state {s}"
                    )));
                }
            }
        }
        Ok(Self { dim, table })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self, s: StateId, a: usize) -> Result<&[f64], MdpError> {
        let rows = self.table.get(s).ok_or(MdpError::UnknownState(s))?;
        if rows.len() == 1 {
            return Ok(&rows[0]); // terminal: zero row for any action
        }
        rows.get(a).map(Vec::as_slice).ok_or(MdpError::InvalidAction {
            action: a,
            actions: rows.len(),
        })
    }

    /// One-hot features over non-terminal `(state, action)` pairs.
    pub fn one_hot(mdp: &TabularMdp) -> Self {
        let a = mdp.action_count();
        let non_terminal: Vec<StateId> =
            (0..mdp.state_count()).filter(|&s| !mdp.is_terminal(s)).collect();
        let dim = non_terminal.len() * a;
        let mut table: Vec<Vec<Vec<f64>>> = Vec::with_capacity(mdp.state_count());
        for s in 0..mdp.state_count() {
            if mdp.is_terminal(s) {
                table.push(vec![vec![0.0; dim]]);
            } else {
                let base = non_terminal.iter().position(|&t| t == s).unwrap() * a;
                table.push(
                    (0..a)
                        .map(|j| {
                            let mut row = vec![0.0; dim];
                            row[base + j] = 1.0;
                            row
                        })
                        .collect(),
                );
            }
        }
        Self { dim, table }
    }
}

/// Fixed per-pair reward offsets for the inaccurate-simulator wrapper.
/// Observed rewards are `Π(r + λ_{s,a})`, `Π` the projection onto `[0,1]`.
#[derive(Debug, Clone)]
pub struct RewardOffsets {
    /// `offsets[s][a]`, each bounded by the wrapper's `λ` in magnitude.
    pub offsets: Vec<Vec<f64>>,
}

/// The stateful episodic simulator. A single instance is single-threaded;
/// parallel use goes through [`MdpSim::fork`], which derives an independent
/// seed stream.
#[derive(Debug, Clone)]
pub struct MdpSim {
    mdp: Arc<TabularMdp>,
    rng: ChaCha8Rng,
    current: StateId,
    checkpoint: Option<StateId>,
    steps: u64,
    restarts: u64,
    offsets: Option<Arc<RewardOffsets>>,
}

impl MdpSim {
    pub fn new(mdp: Arc<TabularMdp>, seed: u64) -> Self {
        let mut rng = rng::seeded_rng(seed);
        let current = mdp.start_dist().sample(&mut rng);
        Self {
            mdp,
            rng,
            current,
            checkpoint: None,
            steps: 0,
            restarts: 1,
            offsets: None,
        }
    }

    /// Attach fixed reward offsets (the λ-inaccurate wrapper installs these).
    pub(crate) fn with_offsets(mut self, offsets: Arc<RewardOffsets>) -> Self {
        self.offsets = Some(offsets);
        self
    }

    pub fn mdp(&self) -> &Arc<TabularMdp> {
        &self.mdp
    }

    pub fn current(&self) -> State {
        self.mdp.state(self.current)
    }

    pub fn at_terminal(&self) -> bool {
        self.mdp.is_terminal(self.current)
    }

    /// Exploratory samples consumed so far (exactly one per `step`).
    pub fn samples(&self) -> u64 {
        self.steps
    }

    /// Episode restarts so far, accounted separately from samples.
    pub fn restarts(&self) -> u64 {
        self.restarts
    }

    /// Play action `a` from the current state.
    pub fn step(&mut self, a: usize) -> Result<(f64, State), MdpError> {
        let s = self.current;
        if self.mdp.is_terminal(s) {
            return Err(MdpError::TerminalStep(s));
        }
        if a >= self.mdp.action_count() {
            return Err(MdpError::InvalidAction {
                action: a,
                actions: self.mdp.action_count(),
            });
        }
        let next = sample_categorical(self.mdp.successors(s, a), &mut self.rng);
        let mut reward = self.mdp.reward(s, a).sample(&mut self.rng);
        if let Some(offsets) = &self.offsets {
            reward = (reward + offsets.offsets[s][a]).clamp(0.0, 1.0);
        }
        self.checkpoint = Some(s);
        self.current = next;
        self.steps += 1;
        Ok((reward, self.mdp.state(next)))
    }

    /// Return to the state the last step was taken from. Free of samples.
    pub fn reset_to_checkpoint(&mut self) -> Result<State, MdpError> {
        let cp = self.checkpoint.ok_or(MdpError::NoCheckpoint)?;
        self.current = cp;
        Ok(self.mdp.state(cp))
    }

    /// Begin a fresh episode from the start distribution.
    pub fn restart(&mut self) -> State {
        self.current = self.mdp.start_dist().sample(&mut self.rng);
        self.checkpoint = None;
        self.restarts += 1;
        self.mdp.state(self.current)
    }

    /// Clone with an independently derived random stream. The clone starts
    /// from the same current state with no checkpoint and fresh counters.
    pub fn fork(&mut self) -> MdpSim {
        let rng = rng::fork(&mut self.rng);
        Self {
            mdp: Arc::clone(&self.mdp),
            rng,
            current: self.current,
            checkpoint: None,
            steps: 0,
            restarts: 0,
            offsets: self.offsets.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON schema for tabular environments
// ---------------------------------------------------------------------------

/// Serialized form of a tabular MDP:
/// `{H, A, states_per_layer, transitions, rewards, features, start}`.
///
/// Transitions are dense row-major probability vectors `P[s][a][s']`;
/// rewards are `{mean, kind}` with kind `deterministic` or `bernoulli`;
/// features are per-state float arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdpSpec {
    #[serde(rename = "H")]
    pub horizon: u32,
    #[serde(rename = "A")]
    pub action_count: usize,
    /// Number of states in each layer `1..=H+1`.
    pub states_per_layer: Vec<usize>,
    /// `transitions[s][a]` = dense probability vector over all states.
    pub transitions: Vec<Vec<Vec<f64>>>,
    /// `rewards[s][a]`.
    pub rewards: Vec<Vec<RewardSpec>>,
    /// `features[s]`, optional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
    pub start: StartSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub mean: f64,
    pub kind: RewardKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Deterministic,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StartSpec {
    Deterministic { state: StateId },
    Categorical { probs: Vec<f64> },
}

impl TabularMdpSpec {
    /// Build the runtime tables. Layer assignment follows `states_per_layer`
    /// in order: ids `0..n₁` are layer 1, the next `n₂` are layer 2, etc.
    pub fn build(&self) -> Result<(TabularMdp, Option<FeatureMap>), MdpError> {
        let n: usize = self.states_per_layer.iter().sum();
        if self.states_per_layer.len() != self.horizon as usize + 1 {
            return Err(MdpError::InvalidEnvironment(format!(
                "states_per_layer has {} entries, want H+1 = {}",
                self.states_per_layer.len(),
                self.horizon + 1
            )));
        }
        let mut layer_of = Vec::with_capacity(n);
        for (i, &count) in self.states_per_layer.iter().enumerate() {
            layer_of.extend(std::iter::repeat(i as u32 + 1).take(count));
        }
        let mut transitions = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        for s in 0..n {
            if layer_of[s] == self.horizon + 1 {
                transitions.push(Vec::new());
                rewards.push(Vec::new());
                continue;
            }
            let t_rows = self
                .transitions
                .get(s)
                .ok_or_else(|| MdpError::InvalidEnvironment(format!("missing transitions[{s}]")))?;
            let r_rows = self
                .rewards
                .get(s)
                .ok_or_else(|| MdpError::InvalidEnvironment(format!("missing rewards[{s}]")))?;
            let mut sparse_rows = Vec::with_capacity(t_rows.len());
            for dense in t_rows {
                if dense.len() != n {
                    return Err(MdpError::InvalidEnvironment(format!(
                        "transition row at state {s} has length {}, want {n}",
                        dense.len()
                    )));
                }
                sparse_rows.push(
                    dense
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(succ, &p)| (succ, p))
                        .collect::<Vec<_>>(),
                );
            }
            transitions.push(sparse_rows);
            rewards.push(
                r_rows
                    .iter()
                    .map(|r| match r.kind {
                        RewardKind::Deterministic => RewardDist::Deterministic { value: r.mean },
                        RewardKind::Bernoulli => RewardDist::bernoulli(r.mean),
                    })
                    .collect(),
            );
        }
        let start = match &self.start {
            StartSpec::Deterministic { state } => StartDist::Deterministic { state: *state },
            StartSpec::Categorical { probs } => StartDist::Categorical {
                probs: probs
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(s, &p)| (s, p))
                    .collect(),
            },
        };
        let mdp = TabularMdp::new(
            self.horizon,
            self.action_count,
            layer_of,
            transitions,
            rewards,
            start,
        )?;
        let features = match &self.features {
            Some(table) => {
                let dim = table.first().map(Vec::len).unwrap_or(0);
                Some(FeatureMap::new(&mdp, dim, table.clone())?)
            }
            None => None,
        };
        Ok((mdp, features))
    }

    /// Serialize a runtime MDP (plus optional features) back to the schema.
    pub fn from_mdp(mdp: &TabularMdp, features: Option<&FeatureMap>) -> Self {
        let n = mdp.state_count();
        let mut states_per_layer = vec![0usize; mdp.horizon() as usize + 1];
        for s in 0..n {
            states_per_layer[mdp.layer(s) as usize - 1] += 1;
        }
        let mut transitions = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        for s in 0..n {
            if mdp.is_terminal(s) {
                transitions.push(Vec::new());
                rewards.push(Vec::new());
                continue;
            }
            let mut t_rows = Vec::with_capacity(mdp.action_count());
            let mut r_rows = Vec::with_capacity(mdp.action_count());
            for a in 0..mdp.action_count() {
                let mut dense = vec![0.0; n];
                for &(succ, p) in mdp.successors(s, a) {
                    dense[succ] += p;
                }
                t_rows.push(dense);
                r_rows.push(match mdp.reward(s, a) {
                    RewardDist::Deterministic { value } => RewardSpec {
                        mean: value,
                        kind: RewardKind::Deterministic,
                    },
                    RewardDist::TwoPoint { p, hi: _ } => RewardSpec {
                        mean: p,
                        kind: RewardKind::Bernoulli,
                    },
                });
            }
            transitions.push(t_rows);
            rewards.push(r_rows);
        }
        let start = match mdp.start_dist() {
            StartDist::Deterministic { state } => StartSpec::Deterministic { state: *state },
            StartDist::Categorical { probs } => {
                let mut dense = vec![0.0; n];
                for &(s, p) in probs {
                    dense[s] += p;
                }
                StartSpec::Categorical { probs: dense }
            }
        };
        Self {
            horizon: mdp.horizon(),
            action_count: mdp.action_count(),
            states_per_layer,
            transitions,
            rewards,
            features: features.map(|f| (0..n).map(|s| f.features(s).unwrap().to_vec()).collect()),
            start,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::fixtures;

    #[test]
    fn deterministic_chain_step() {
        // Two non-terminal states in a row, reward 1.0, single action.
        let mdp = fixtures::two_state_chain();
        let mut sim = MdpSim::new(Arc::new(mdp), 3);
        let s0 = sim.current();
        assert_eq!(s0.horizon, 1);
        let (r, next) = sim.step(0).unwrap();
        assert_eq!(r, 1.0);
        assert_eq!(next.horizon, 2);
        assert_eq!(sim.samples(), 1);
    }

    #[test]
    fn step_at_last_layer_lands_in_terminal() {
        let mdp = fixtures::two_state_chain();
        let h = mdp.horizon();
        let mut sim = MdpSim::new(Arc::new(mdp), 3);
        for _ in 0..h {
            sim.step(0).unwrap();
        }
        assert!(sim.at_terminal());
        assert_eq!(sim.current().horizon, h + 1);
        assert_eq!(sim.step(0), Err(MdpError::TerminalStep(sim.current().id)));
    }

    #[test]
    fn invalid_action_rejected() {
        let mdp = fixtures::two_state_chain();
        let mut sim = MdpSim::new(Arc::new(mdp), 3);
        assert!(matches!(
            sim.step(5),
            Err(MdpError::InvalidAction { action: 5, .. })
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mdp = fixtures::two_state_chain();
        let mut sim = MdpSim::new(Arc::new(mdp), 3);
        let before = sim.current();
        sim.step(0).unwrap();
        let restored = sim.reset_to_checkpoint().unwrap();
        assert_eq!(before, restored);
        assert_eq!(sim.current(), before);
        // Counter unchanged by the reset itself.
        assert_eq!(sim.samples(), 1);
    }

    #[test]
    fn reset_after_restart_is_an_error() {
        let mdp = fixtures::two_state_chain();
        let mut sim = MdpSim::new(Arc::new(mdp), 3);
        sim.step(0).unwrap();
        sim.restart();
        assert_eq!(sim.reset_to_checkpoint(), Err(MdpError::NoCheckpoint));
    }

    #[test]
    fn restart_consumes_no_samples() {
        let mdp = fixtures::two_state_chain();
        let mut sim = MdpSim::new(Arc::new(mdp), 3);
        sim.step(0).unwrap();
        let samples = sim.samples();
        sim.restart();
        assert_eq!(sim.samples(), samples);
        assert_eq!(sim.current().horizon, 1);
    }

    #[test]
    fn deterministic_start_always_same_state() {
        let mdp = fixtures::two_state_chain();
        let mut sim = MdpSim::new(Arc::new(mdp), 9);
        let s0 = sim.current();
        for _ in 0..20 {
            assert_eq!(sim.restart(), s0);
        }
    }

    #[test]
    fn rewards_outside_unit_interval_rejected_at_construction() {
        let err = TabularMdp::new(
            1,
            1,
            vec![1, 2],
            vec![vec![vec![(1, 1.0)]], Vec::new()],
            vec![vec![RewardDist::Deterministic { value: 1.5 }], Vec::new()],
            StartDist::Deterministic { state: 0 },
        );
        assert!(matches!(err, Err(MdpError::InvalidEnvironment(_))));
    }

    #[test]
    fn one_hot_features_are_unit_vectors_and_zero_on_terminal() {
        let mdp = fixtures::two_state_chain();
        let fm = FeatureMap::one_hot(&mdp);
        assert_eq!(fm.dim(), 2);
        assert_eq!(fm.features(0).unwrap(), &[1.0, 0.0]);
        assert_eq!(fm.features(1).unwrap(), &[0.0, 1.0]);
        let terminal = mdp.layer_states(mdp.horizon() + 1).next().unwrap();
        assert!(fm.features(terminal).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(fm.features(99).unwrap_err(), MdpError::UnknownState(99));
    }

    #[test]
    fn spec_round_trip_preserves_tables() {
        let mdp = fixtures::two_state_chain();
        let fm = FeatureMap::one_hot(&mdp);
        let spec = TabularMdpSpec::from_mdp(&mdp, Some(&fm));
        let json = serde_json::to_string(&spec).unwrap();
        let parsed: TabularMdpSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, parsed);
        let (rebuilt, _) = parsed.build().unwrap();
        assert_eq!(rebuilt.state_count(), mdp.state_count());
        assert_eq!(rebuilt.reward(0, 0).mean(), mdp.reward(0, 0).mean());
    }
}
