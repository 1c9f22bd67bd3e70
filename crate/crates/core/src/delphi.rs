//! The guess-and-check driver: optimistic parameter choice over the version
//! space, consistency-checked rollouts, oracle escalation on breaks, and the
//! induced policy — plus the hyperparameter schedule and the action-value
//! variant for deterministic dynamics.
//!
//! One outer iteration: pick `θ_t` maximizing the predicted start value over
//! `Θ_{t−1}`; roll out the `θ_t`-induced policy; at every visited state
//! measure one TD vector per action and demand some action with
//! `|⟨Δ̂, 1 ⊕ θ_t⟩| ≤ ε_tol`. The first state with no such action is a
//! break: query the expert there, re-measure its action with the enlarged
//! budget, intersect the version space with the new slab, and restart the
//! iteration. A full batch of clean rollouts ends the run.

use serde::{Deserialize, Serialize};

use crate::linalg::{norm2, scale};
use crate::mdp::{FeatureMap, MdpError, MdpSim, QFeatureMap, StartDist, StateId, TabularMdp};
use crate::oracle::{ExpertOracle, OracleError};
use crate::report::{BreakRecord, RunRecord, RunStats, Termination};
use crate::td::{self, TdError, TdTag, TdVector};
use crate::vspace::{VersionSpace, VspaceError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DelphiError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no action available at terminal state {0}")]
    NoAction(StateId),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Td(#[from] TdError),
    #[error(transparent)]
    Vspace(#[from] VspaceError),
}

// ---------------------------------------------------------------------------
// Hyperparameters
// ---------------------------------------------------------------------------

/// Optional per-field replacements for the derived schedule. Any field left
/// `None` is computed from its defining equation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_d: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rollout: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eval: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_eval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_bar_eval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_roll: Option<f64>,
}

/// Which flags (mirroring [`Overrides`]) were in effect.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverriddenFlags {
    pub e_d: bool,
    pub n_rollout: bool,
    pub cap_n: bool,
    pub n_eval: bool,
    pub eps_eval: bool,
    pub eps_bar_eval: bool,
    pub eps_tol: bool,
    pub eps_roll: bool,
}

/// The derived schedule. Integer quantities are rounded up from their
/// defining expressions; the chain is evaluated in dependency order, so an
/// override propagates into every quantity downstream of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub e_d: u64,
    pub n_rollout: u64,
    /// `N = (E_d+1)·n_rollout·H·A`, the state-action visit cap.
    pub cap_n: u64,
    pub n_eval: u64,
    pub eps_eval: f64,
    pub eps_bar_eval: f64,
    pub eps_tol: f64,
    pub eps_roll: f64,
    pub eps_target: f64,
    pub delta: f64,
    pub b_bound: f64,
    pub overridden: OverriddenFlags,
}

/// Which elimination threshold the version-space update uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `ε̄_eval / (2√E_d)` — the threshold the elimination and iteration
    /// bounds are actually proved at. Default.
    #[default]
    ProofTight,
    /// `ε_tol`, as the pseudo-code literally filters with.
    PseudocodeTol,
}

/// Evaluate the schedule from the problem constants.
pub fn compute_hyperparameters(
    d: usize,
    h: u32,
    a: usize,
    b: f64,
    eps_target: f64,
    delta: f64,
) -> Result<HyperParams, DelphiError> {
    compute_hyperparameters_with(d, h, a, b, eps_target, delta, &Overrides::default())
}

/// Evaluate the schedule with per-field overrides.
pub fn compute_hyperparameters_with(
    d: usize,
    h: u32,
    a: usize,
    b: f64,
    eps_target: f64,
    delta: f64,
    overrides: &Overrides,
) -> Result<HyperParams, DelphiError> {
    if d == 0 || h == 0 || a == 0 {
        return Err(DelphiError::InvalidArgument(
            "d, H and A must be positive".into(),
        ));
    }
    if !(b > 0.0 && eps_target > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(DelphiError::InvalidArgument(
            "B, ε_target must be positive and δ in (0,1)".into(),
        ));
    }
    if eps_target > h as f64 {
        return Err(DelphiError::InvalidArgument(format!(
            "ε_target {eps_target} exceeds the horizon {h}"
        )));
    }
    let df = d as f64;
    let hf = h as f64;
    let eps2 = eps_target * eps_target;

    let e_d = overrides.e_d.unwrap_or_else(|| {
        crate::exact::eluder_dimension_bound(d, b, eps_target).ceil() as u64
    });
    let n_rollout = overrides.n_rollout.unwrap_or_else(|| {
        let raw = 2.0 * hf * hf * (1.0 + 2.0 * b).powi(2) * (2.0 * (e_d as f64 + 1.0) / delta).ln()
            / eps2;
        raw.ceil() as u64
    });
    let cap_n = overrides.cap_n.unwrap_or_else(|| {
        (e_d + 1)
            .saturating_mul(n_rollout)
            .saturating_mul(h as u64)
            .saturating_mul(a as u64)
    });
    let log_term = (2.0 * (df + 1.0) * cap_n as f64 / delta).ln();
    let n_eval = overrides.n_eval.unwrap_or_else(|| {
        (50.0 * hf * hf * (1.0 + b * b) * (df + 1.0) * log_term / eps2).ceil() as u64
    });
    let eps_eval = overrides
        .eps_eval
        .unwrap_or_else(|| (log_term / (2.0 * n_eval as f64)).sqrt());
    let eps_bar_eval = overrides
        .eps_bar_eval
        .unwrap_or_else(|| (1.0 + b * b).sqrt() * (df + 1.0).sqrt() * eps_eval);
    let eps_tol = overrides.eps_tol.unwrap_or(4.0 * eps_bar_eval);
    let eps_roll = overrides.eps_roll.unwrap_or_else(|| {
        hf * (1.0 + 2.0 * b) * ((2.0 * (e_d as f64 + 1.0) / delta).ln() / (2.0 * n_rollout as f64)).sqrt()
    });
    Ok(HyperParams {
        e_d,
        n_rollout,
        cap_n,
        n_eval,
        eps_eval,
        eps_bar_eval,
        eps_tol,
        eps_roll,
        eps_target,
        delta,
        b_bound: b,
        overridden: OverriddenFlags {
            e_d: overrides.e_d.is_some(),
            n_rollout: overrides.n_rollout.is_some(),
            cap_n: overrides.cap_n.is_some(),
            n_eval: overrides.n_eval.is_some(),
            eps_eval: overrides.eps_eval.is_some(),
            eps_bar_eval: overrides.eps_bar_eval.is_some(),
            eps_tol: overrides.eps_tol.is_some(),
            eps_roll: overrides.eps_roll.is_some(),
        },
    })
}

impl HyperParams {
    /// The slab threshold for version-space updates under `mode`.
    pub fn constraint_threshold(&self, mode: ThresholdMode) -> f64 {
        match mode {
            ThresholdMode::ProofTight => self.eps_bar_eval / (2.0 * (self.e_d as f64).sqrt()),
            ThresholdMode::PseudocodeTol => self.eps_tol,
        }
    }
}

/// Schedule for exact-measurement runs on deterministic environments: one
/// sample per estimate, one rollout per batch (rollouts are identical), an
/// iteration budget of `d` (the linear-independence cap), and thresholds
/// scaled so the elimination slab sits at 1e-7 against a break tolerance of
/// 1e-3.
pub fn exact_mode_params(d: usize, h: u32, a: usize, b: f64) -> HyperParams {
    let e_d = d.max(1) as u64;
    compute_hyperparameters_with(
        d,
        h,
        a,
        b,
        (h as f64).min(1.0),
        0.05,
        &Overrides {
            e_d: Some(e_d),
            n_rollout: Some(1),
            n_eval: Some(1),
            eps_bar_eval: Some(2.0 * (e_d as f64).sqrt() * 1e-7),
            eps_tol: Some(1e-3),
            ..Overrides::default()
        },
    )
    .expect("exact-mode schedule is well-formed")
}

// ---------------------------------------------------------------------------
// Consistency test
// ---------------------------------------------------------------------------

/// Minimum absolute TD residual over actions and its argmin (lowest index on
/// ties). Consistent iff the minimum is `≤ eps_tol`.
pub fn consistency_test(
    tds: &[TdVector],
    theta: &[f64],
    eps_tol: f64,
) -> Result<(bool, usize), DelphiError> {
    let (best, min_res) = argmin_residual(tds, theta)?;
    Ok((min_res <= eps_tol, best))
}

fn argmin_residual(tds: &[TdVector], theta: &[f64]) -> Result<(usize, f64), DelphiError> {
    if tds.is_empty() {
        return Err(DelphiError::InvalidArgument(
            "consistency test needs at least one TD vector".into(),
        ));
    }
    let mut best = 0usize;
    let mut best_res = tds[0].residual(theta).abs();
    for (a, td) in tds.iter().enumerate().skip(1) {
        let res = td.residual(theta).abs();
        if res < best_res {
            best = a;
            best_res = res;
        }
    }
    Ok((best, best_res))
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Per-run switches that are not part of the derived schedule.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    /// Treat measurements as exact: one sample per estimate. Only sound on
    /// deterministic environments, where the variance is zero.
    pub exact_measurement: bool,
    pub threshold_mode: ThresholdMode,
    /// Start feature vector for stochastic starts; when absent it is taken
    /// from the deterministic start state, or estimated from restarts.
    pub start_features: Option<Vec<f64>>,
}

/// The value-consistency policy induced by a parameter: at each state,
/// measure every action's TD vector and play the smallest absolute residual.
#[derive(Debug, Clone)]
pub struct InducedPolicy {
    pub theta: Vec<f64>,
    pub n_eval: u64,
}

impl InducedPolicy {
    /// Runtime action selection: consumes `A · n_eval` samples and leaves
    /// the simulator where it was.
    pub fn act(&self, sim: &mut MdpSim, features: &FeatureMap) -> Result<usize, DelphiError> {
        if sim.at_terminal() {
            return Err(DelphiError::NoAction(sim.current().id));
        }
        let a_count = sim.mdp().action_count();
        let mut tds = Vec::with_capacity(a_count);
        for a in 0..a_count {
            tds.push(td::measure_td(sim, features, a, self.n_eval)?);
        }
        Ok(argmin_residual(&tds, &self.theta)?.0)
    }

    /// The deterministic policy this parameter induces under exact
    /// measurements: per-state argmin of true TD residuals. This is the
    /// object exact evaluation runs on.
    pub fn exact_action_table(
        &self,
        mdp: &TabularMdp,
        features: &FeatureMap,
    ) -> Result<Vec<usize>, DelphiError> {
        let mut table = vec![0usize; mdp.state_count()];
        for s in 0..mdp.state_count() {
            if mdp.is_terminal(s) {
                continue;
            }
            let tds: Vec<TdVector> = (0..mdp.action_count())
                .map(|a| td::true_td(mdp, features, s, a))
                .collect::<Result<_, _>>()?;
            table[s] = argmin_residual(&tds, &self.theta)?.0;
        }
        Ok(table)
    }
}

/// Result bundle of a run.
#[derive(Debug, Clone)]
pub struct DelphiOutcome {
    pub theta_hat: Vec<f64>,
    pub policy: InducedPolicy,
    pub record: RunRecord,
}

impl DelphiOutcome {
    pub fn stats(&self) -> &RunStats {
        &self.record.stats
    }
}

/// Run the value-mode search.
pub fn run_delphi(
    sim: &mut MdpSim,
    oracle: &ExpertOracle,
    features: &FeatureMap,
    params: &HyperParams,
    cfg: &RunConfig,
) -> Result<DelphiOutcome, DelphiError> {
    let d = features.dim();
    let horizon = sim.mdp().horizon();
    let a_count = sim.mdp().action_count();
    let n_eval = if cfg.exact_measurement { 1 } else { params.n_eval };
    let n_refined = if cfg.exact_measurement {
        1
    } else {
        4 * params.e_d * params.n_eval
    };
    let tau = params.constraint_threshold(cfg.threshold_mode);

    let samples_before = sim.samples();
    let restarts_before = sim.restarts();
    let calls_before = oracle.call_count();
    let start_features = match &cfg.start_features {
        Some(v) => {
            if v.len() != d {
                return Err(DelphiError::InvalidArgument(
                    "start feature vector has the wrong dimension".into(),
                ));
            }
            v.clone()
        }
        None => match sim.mdp().start_dist() {
            StartDist::Deterministic { state } => features.features(*state)?.to_vec(),
            StartDist::Categorical { .. } => estimate_start_features(sim, features, n_eval)?,
        },
    };
    let cap = (params.e_d + 1) as usize;
    let mut space = VersionSpace::ball(d, params.b_bound, cap);
    let mut optimistic_values = Vec::new();
    let mut breaks: Vec<BreakRecord> = Vec::new();
    let mut break_thetas: Vec<Vec<f64>> = Vec::new();
    let mut theta = vec![0.0; d];
    let mut termination = Termination::Exhausted;
    let mut iterations = 0u32;

    'iterations: for t in 1..=(params.e_d + 1) as u32 {
        let sol = space.optimistic_argmax(&start_features)?;
        theta = sol.theta;
        optimistic_values.push(sol.value);
        iterations = t;
        let mut broke = false;
        'rollouts: for _ in 0..params.n_rollout {
            sim.restart();
            for _ in 1..=horizon {
                if sim.at_terminal() {
                    break;
                }
                let state = sim.current();
                let mut tds = Vec::with_capacity(a_count);
                for a in 0..a_count {
                    tds.push(td::measure_td(sim, features, a, n_eval)?);
                }
                let (best_action, min_res) = argmin_residual(&tds, &theta)?;
                if min_res > params.eps_tol {
                    // No consistent action here; the expert's certainly
                    // isn't consistent either, so its refined TD vector
                    // cuts the version space.
                    let oracle_action = oracle.query(state)?;
                    let mut refined = td::measure_td(sim, features, oracle_action, n_refined)?;
                    refined.tag = TdTag::Refined;
                    space = space.add_constraint(&refined, tau, state.id, t)?;
                    breaks.push(BreakRecord {
                        iteration: t,
                        state_id: state.id,
                        min_residual: min_res,
                        oracle_action: Some(oracle_action),
                    });
                    break_thetas.push(theta.clone());
                    broke = true;
                    break 'rollouts;
                }
                sim.step(best_action)?; // roll forward on a fresh sample
            }
        }
        if !broke {
            termination = Termination::Consistent;
            break 'iterations;
        }
    }

    let stats = RunStats {
        oracle_calls: oracle.call_count() - calls_before,
        exploratory_samples: sim.samples() - samples_before,
        restarts: sim.restarts() - restarts_before,
        iterations,
        optimistic_values,
        termination,
        theta_hat: theta.clone(),
        breaks,
    };
    Ok(DelphiOutcome {
        policy: InducedPolicy {
            theta: theta.clone(),
            n_eval,
        },
        theta_hat: theta,
        record: RunRecord {
            stats,
            constraints: space.constraints().to_vec(),
            break_thetas,
            theta_circ: None,
        },
    })
}

/// Average start features over `n` fresh restarts. Consumes restarts only —
/// no exploratory samples.
pub fn estimate_start_features(
    sim: &mut MdpSim,
    features: &FeatureMap,
    n: u64,
) -> Result<Vec<f64>, DelphiError> {
    if n == 0 {
        return Err(DelphiError::InvalidArgument(
            "start-feature estimation needs n ≥ 1".into(),
        ));
    }
    let mut acc = vec![0.0; features.dim()];
    for _ in 0..n {
        let s = sim.restart();
        let phi = features.features(s.id)?;
        for (slot, &v) in acc.iter_mut().zip(phi) {
            *slot += v;
        }
    }
    scale(&mut acc, 1.0 / n as f64);
    Ok(acc)
}

/// Roll `m` episodes under a caller-supplied action rule and report the mean
/// return together with the Hoeffding half-width `H·√(log(2/δ)/(2m))`.
pub fn evaluate_policy_rollouts<F>(
    sim: &mut MdpSim,
    mut act: F,
    m: u64,
    delta: f64,
) -> Result<(f64, f64), DelphiError>
where
    F: FnMut(&mut MdpSim) -> Result<usize, DelphiError>,
{
    if m == 0 {
        return Err(DelphiError::InvalidArgument("m must be positive".into()));
    }
    let mut total = 0.0;
    for _ in 0..m {
        sim.restart();
        let mut episode = 0.0;
        while !sim.at_terminal() {
            let a = act(sim)?;
            let (r, _) = sim.step(a)?;
            episode += r;
        }
        total += episode;
    }
    let mean = total / m as f64;
    let half_width =
        sim.mdp().horizon() as f64 * ((2.0f64 / delta).ln() / (2.0 * m as f64)).sqrt();
    Ok((mean, half_width))
}

// ---------------------------------------------------------------------------
// Action-value variant (deterministic dynamics)
// ---------------------------------------------------------------------------

/// Result bundle of an action-value run. The start action is part of the
/// recovered behavior: evaluation replays from `(s₀, start_action)`.
#[derive(Debug, Clone)]
pub struct QDelphiOutcome {
    pub theta_hat: Vec<f64>,
    pub start_action: usize,
    pub record: RunRecord,
}

impl QDelphiOutcome {
    pub fn stats(&self) -> &RunStats {
        &self.record.stats
    }

    /// Replay the induced behavior under exact measurements on the tabular
    /// environment and return the exact return of that trajectory.
    pub fn exact_trajectory_return(
        &self,
        mdp: &TabularMdp,
        qf: &QFeatureMap,
    ) -> Result<f64, DelphiError> {
        let start = match mdp.start_dist() {
            StartDist::Deterministic { state } => *state,
            _ => {
                return Err(DelphiError::InvalidArgument(
                    "q-variant evaluation needs a deterministic start".into(),
                ))
            }
        };
        let mut s = start;
        let mut a = self.start_action;
        let mut total = 0.0;
        while !mdp.is_terminal(s) {
            let tr = td::true_q_transition(mdp, s, a)?;
            total += tr.mean_reward;
            let succ = tr.successor;
            if mdp.is_terminal(succ) {
                break;
            }
            let candidates: Vec<TdVector> = (0..mdp.action_count())
                .map(|next| tr.td_vector(qf, Some(next), TdTag::Exact))
                .collect::<Result<_, _>>()?;
            let (best, _) = argmin_residual(&candidates, &self.theta_hat)?;
            s = succ;
            a = best;
        }
        Ok(total)
    }
}

/// Run the action-value search. Requires deterministic dynamics; a detected
/// stochastic transition aborts with [`TdError::DeterminismViolation`].
pub fn run_delphi_q(
    sim: &mut MdpSim,
    oracle: &ExpertOracle,
    qf: &QFeatureMap,
    params: &HyperParams,
    cfg: &RunConfig,
) -> Result<QDelphiOutcome, DelphiError> {
    let d = qf.dim();
    let horizon = sim.mdp().horizon();
    let a_count = sim.mdp().action_count();
    let n_eval = if cfg.exact_measurement { 1 } else { params.n_eval };
    let n_refined = if cfg.exact_measurement {
        1
    } else {
        4 * params.e_d * params.n_eval
    };
    let tau = params.constraint_threshold(cfg.threshold_mode);
    let start = match sim.mdp().start_dist() {
        StartDist::Deterministic { state } => *state,
        _ => {
            return Err(DelphiError::InvalidArgument(
                "the action-value variant needs a deterministic start state".into(),
            ))
        }
    };

    let samples_before = sim.samples();
    let restarts_before = sim.restarts();
    let calls_before = oracle.call_count();
    let cap = (params.e_d + 1) as usize;
    let mut space = VersionSpace::ball(d, params.b_bound, cap);
    let mut optimistic_values = Vec::new();
    let mut breaks: Vec<BreakRecord> = Vec::new();
    let mut break_thetas: Vec<Vec<f64>> = Vec::new();
    let mut theta = vec![0.0; d];
    let mut start_action = 0usize;
    let mut termination = Termination::Exhausted;
    let mut iterations = 0u32;

    'iterations: for t in 1..=(params.e_d + 1) as u32 {
        // Optimistic choice over parameters *and* the first action.
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for a in 0..a_count {
            let sol = space.optimistic_argmax(qf.features(start, a)?)?;
            if best.as_ref().map_or(true, |(v, _, _)| sol.value > *v) {
                best = Some((sol.value, a, sol.theta));
            }
        }
        let (value, a0, theta_t) = best.expect("at least one action");
        theta = theta_t;
        start_action = a0;
        optimistic_values.push(value);
        iterations = t;

        let mut broke = false;
        'rollouts: for _ in 0..params.n_rollout {
            sim.restart();
            let mut action = a0;
            for _ in 1..=horizon {
                if sim.at_terminal() {
                    break;
                }
                let tr = td::measure_q_transition(sim, action, n_eval)?;
                let successor_terminal = sim.mdp().is_terminal(tr.successor);
                let candidates: Vec<Option<usize>> = if successor_terminal {
                    vec![None]
                } else {
                    (0..a_count).map(Some).collect()
                };
                let tds: Vec<TdVector> = candidates
                    .iter()
                    .map(|&next| tr.td_vector(qf, next, TdTag::Measured))
                    .collect::<Result<_, _>>()?;
                let (best_idx, min_res) = argmin_residual(&tds, &theta)?;
                if min_res > params.eps_tol {
                    // The successor's expert action pins the refined slab.
                    // A terminal successor has no action to ask about: the
                    // pair's own Bellman row is the constraint.
                    let oracle_action = if successor_terminal {
                        None
                    } else {
                        Some(oracle.query(sim.mdp().state(tr.successor))?)
                    };
                    let refined_tr = td::measure_q_transition(sim, action, n_refined)?;
                    let refined = refined_tr.td_vector(qf, oracle_action, TdTag::Refined)?;
                    space = space.add_constraint(&refined, tau, tr.state, t)?;
                    breaks.push(BreakRecord {
                        iteration: t,
                        state_id: tr.state,
                        min_residual: min_res,
                        oracle_action,
                    });
                    break_thetas.push(theta.clone());
                    broke = true;
                    break 'rollouts;
                }
                sim.step(action)?; // move to the (unique) successor
                if successor_terminal {
                    break;
                }
                action = candidates[best_idx].expect("non-terminal candidates are concrete");
            }
        }
        if !broke {
            termination = Termination::Consistent;
            break 'iterations;
        }
    }

    let stats = RunStats {
        oracle_calls: oracle.call_count() - calls_before,
        exploratory_samples: sim.samples() - samples_before,
        restarts: sim.restarts() - restarts_before,
        iterations,
        optimistic_values,
        termination,
        theta_hat: theta.clone(),
        breaks,
    };
    Ok(QDelphiOutcome {
        theta_hat: theta,
        start_action,
        record: RunRecord {
            stats,
            constraints: space.constraints().to_vec(),
            break_thetas,
            theta_circ: None,
        },
    })
}

// ---------------------------------------------------------------------------

/// Scale check helper: `‖θ‖ ≤ B` for returned parameters.
pub fn theta_norm_ok(params: &HyperParams, theta: &[f64]) -> bool {
    norm2(theta) <= params.b_bound + 1e-6
}
