//! Brute-force ground truth on tabular MDPs, plus the Eluder-sequence
//! verifier used to audit recorded runs.
//!
//! Everything here is double precision with explicit residual checks; the
//! 1e-12 tolerances sit far below any algorithmic threshold in the crate.

use thiserror::Error;

use crate::linalg::one_oplus_dot;
use crate::mdp::{StateId, TabularMdp};
use crate::report::RunRecord;

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("policy table must cover every state (got {got}, want {want})")]
    PolicyTooShort { got: usize, want: usize },
    #[error("dimension mismatch: {0}")]
    DimensionError(String),
    #[error("missing constraint dump or per-iteration parameters in the run record")]
    InvalidArgument,
}

/// Exact per-state values (and per-action values) of a policy.
#[derive(Debug, Clone)]
pub struct ValueTable {
    /// `v[s]`, the value of the evaluated policy from state `s`.
    pub v: Vec<f64>,
    /// `q[s][a]`; empty rows on the terminal layer.
    pub q: Vec<Vec<f64>>,
}

impl ValueTable {
    /// Max Bellman residual `|v(s) - (r(s,π) + ⟨P(s,π), v⟩)|` over states.
    pub fn bellman_residual(&self, mdp: &TabularMdp, policy: &[usize]) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..mdp.state_count() {
            if mdp.is_terminal(s) {
                worst = worst.max(self.v[s].abs());
                continue;
            }
            let a = policy[s];
            let mut rhs = mdp.reward(s, a).mean();
            for &(succ, p) in mdp.successors(s, a) {
                rhs += p * self.v[succ];
            }
            worst = worst.max((self.v[s] - rhs).abs());
        }
        worst
    }
}

/// Evaluate a deterministic policy by backward induction over layers
/// `H → 1`. The policy is a per-state action table; terminal entries are
/// ignored.
pub fn exact_value(mdp: &TabularMdp, policy: &[usize]) -> Result<ValueTable, ExactError> {
    if policy.len() < mdp.state_count() {
        return Err(ExactError::PolicyTooShort {
            got: policy.len(),
            want: mdp.state_count(),
        });
    }
    let table = backward_induction(mdp, |s, q_row| q_row[policy[s]]);
    Ok(table)
}

/// Optimal policy and values; ties broken by lowest action index.
pub fn exact_optimal(mdp: &TabularMdp) -> (Vec<usize>, ValueTable) {
    let mut policy = vec![0usize; mdp.state_count()];
    let table = backward_induction(mdp, |s, q_row| {
        let mut best = 0usize;
        for (a, &q) in q_row.iter().enumerate() {
            if q > q_row[best] {
                best = a;
            }
        }
        policy[s] = best;
        q_row[best]
    });
    (policy, table)
}

fn backward_induction(
    mdp: &TabularMdp,
    mut pick: impl FnMut(StateId, &[f64]) -> f64,
) -> ValueTable {
    let n = mdp.state_count();
    let mut v = vec![0.0; n];
    let mut q = vec![Vec::new(); n];
    for h in (1..=mdp.horizon()).rev() {
        for s in mdp.layer_states(h).collect::<Vec<_>>() {
            let q_row: Vec<f64> = (0..mdp.action_count())
                .map(|a| {
                    let mut total = mdp.reward(s, a).mean();
                    for &(succ, p) in mdp.successors(s, a) {
                        total += p * v[succ];
                    }
                    total
                })
                .collect();
            v[s] = pick(s, &q_row);
            q[s] = q_row;
        }
    }
    ValueTable { v, q }
}

/// Fit `θ` with `⟨φ(s), θ⟩ = values[s]` over non-terminal states by least
/// squares. Returns the minimum-norm solution when the fit is exact (sup
/// residual ≤ 1e-9), `None` when the values are not realizable in these
/// features.
pub fn fit_linear_parameter(
    mdp: &TabularMdp,
    features: &crate::mdp::FeatureMap,
    values: &[f64],
) -> Option<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};
    let rows: Vec<StateId> = (0..mdp.state_count()).filter(|&s| !mdp.is_terminal(s)).collect();
    let d = features.dim();
    let phi = DMatrix::from_fn(rows.len(), d, |r, c| features.features(rows[r]).unwrap()[c]);
    let target = DVector::from_fn(rows.len(), |r, _| values[rows[r]]);
    let svd = phi.clone().svd(true, true);
    let theta = svd.solve(&target, 1e-12).ok()?;
    let residual = (&phi * &theta - &target).amax();
    if residual <= 1e-9 {
        Some(theta.iter().copied().collect())
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Eluder sequences
// ---------------------------------------------------------------------------

/// Closed-form bound on the Eluder dimension of `d`-dimensional linear
/// functions with parameter norm at most `b`, at scale `eps`:
/// `3d·(e/(e-1))·ln{3 + 3(2B/ε)²} + 1`.
pub fn eluder_dimension_bound(d: usize, b: f64, eps: f64) -> f64 {
    let e = std::f64::consts::E;
    3.0 * d as f64 * (e / (e - 1.0)) * (3.0 + 3.0 * (2.0 * b / eps).powi(2)).ln() + 1.0
}

/// Outcome of an Eluder-sequence verification.
#[derive(Debug, Clone, PartialEq)]
pub struct EluderCheck {
    pub ok: bool,
    /// Index of the first element violating either condition, if any.
    pub first_violation: Option<usize>,
}

impl EluderCheck {
    fn pass() -> Self {
        Self {
            ok: true,
            first_violation: None,
        }
    }

    fn fail(i: usize) -> Self {
        Self {
            ok: false,
            first_violation: Some(i),
        }
    }
}

/// Check that `(points[i], params[i])` forms an Eluder sequence for the
/// class `f_θ(x) = ⟨1 ⊕ θ, x⟩` with reference parameter `theta_star`:
/// for every `i`, `|f_i(x_i) − f★(x_i)| > ε` while
/// `Σ_{j<i} (f_i(x_j) − f★(x_j))² ≤ ε²`.
pub fn verify_eluder_sequence(
    points: &[Vec<f64>],
    params: &[Vec<f64>],
    theta_star: &[f64],
    eps: f64,
) -> Result<EluderCheck, ExactError> {
    if points.len() != params.len() {
        return Err(ExactError::DimensionError(format!(
            "{} points vs {} parameters",
            points.len(),
            params.len()
        )));
    }
    for (i, x) in points.iter().enumerate() {
        if x.len() != theta_star.len() + 1 || params[i].len() != theta_star.len() {
            return Err(ExactError::DimensionError(format!(
                "element {i} has incompatible dimensions"
            )));
        }
        let gap = |theta: &[f64], x: &[f64]| one_oplus_dot(x, theta) - one_oplus_dot(x, theta_star);
        if gap(&params[i], x).abs() <= eps {
            return Ok(EluderCheck::fail(i));
        }
        let hist: f64 = points[..i].iter().map(|xj| gap(&params[i], xj).powi(2)).sum();
        if hist > eps * eps {
            return Ok(EluderCheck::fail(i));
        }
    }
    Ok(EluderCheck::pass())
}

/// Post-hoc audit of a recorded run: the sequence of refined TD vectors and
/// the parameters chosen at the iterations that produced them must form an
/// Eluder sequence with respect to the true parameter, at scale
/// `eps_bar` and with condition-two threshold `eps_bar²` — the thresholds
/// under which the iteration bound is proved.
///
/// Empty runs (no consistency breaks) pass vacuously.
pub fn check_delphi_eluder(
    record: &RunRecord,
    theta_circ: &[f64],
    eps_bar: f64,
) -> Result<EluderCheck, ExactError> {
    let constraints = &record.constraints;
    if constraints.len() != record.break_thetas.len() {
        return Err(ExactError::InvalidArgument);
    }
    let points: Vec<Vec<f64>> = constraints.iter().map(|c| c.delta.clone()).collect();
    verify_eluder_sequence(&points, &record.break_thetas, theta_circ, eps_bar)
}
