//! Model-error wrappers: the λ-inaccurate simulator (fixed bounded reward
//! offsets, projected back to `[0,1]`) and the η-misspecified feature map
//! (bounded uniform value error with the same parameter).

use std::sync::Arc;

use crate::mdp::{FeatureMap, MdpSim, RewardOffsets, TabularMdp};
use crate::rng::{derive_seed, seeded_rng};
use rand::Rng;

/// How the fixed per-pair offsets `λ_{s,a}` are chosen (each bounded by the
/// wrapper's `λ` in magnitude).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetRule {
    /// `+λ` everywhere.
    Constant,
    /// Sign alternates with the parity of `s + a`.
    Alternating,
    /// Deterministic per-pair magnitudes and signs drawn from a seed.
    Hashed { seed: u64 },
}

/// Build the offset table for a tabular environment.
pub fn offset_table(mdp: &TabularMdp, lambda: f64, rule: OffsetRule) -> RewardOffsets {
    assert!(lambda >= 0.0, "offset bound must be nonnegative");
    let mut offsets = Vec::with_capacity(mdp.state_count());
    for s in 0..mdp.state_count() {
        if mdp.is_terminal(s) {
            offsets.push(Vec::new());
            continue;
        }
        let row = (0..mdp.action_count())
            .map(|a| match rule {
                OffsetRule::Constant => lambda,
                OffsetRule::Alternating => {
                    if (s + a) % 2 == 0 {
                        lambda
                    } else {
                        -lambda
                    }
                }
                OffsetRule::Hashed { seed } => {
                    let mut rng = seeded_rng(derive_seed(seed, (s * 131 + a) as u64));
                    rng.gen_range(-lambda..=lambda)
                }
            })
            .collect();
        offsets.push(row);
    }
    RewardOffsets { offsets }
}

/// Wrap a simulator so every observed reward is `Π(r + λ_{s,a})`, `Π` the
/// projection onto `[0,1]`. Transitions are untouched. `λ = 0` is the
/// identity.
pub fn wrap_inaccurate(sim: MdpSim, lambda: f64, rule: OffsetRule) -> MdpSim {
    let offsets = offset_table(sim.mdp(), lambda, rule);
    sim.with_offsets(Arc::new(offsets))
}

/// Shrink a feature map per state so the value predictions of `theta` move
/// by at most `eta` in sup norm: `φ'(s) = (1 − α_s)·φ(s)` with
/// `α_s·|⟨φ(s), θ⟩| ≤ eta`. Keeps norms at most one and keeps the same
/// parameter well-defined.
pub fn wrap_misspecified_features(
    mdp: &TabularMdp,
    features: &FeatureMap,
    theta: &[f64],
    eta: f64,
    seed: u64,
) -> FeatureMap {
    let mut rng = seeded_rng(derive_seed(seed, 0x77));
    let table: Vec<Vec<f64>> = (0..mdp.state_count())
        .map(|s| {
            let phi = features.features(s).unwrap();
            let value = crate::linalg::dot(phi, theta);
            let alpha = if value.abs() < 1e-12 {
                0.0
            } else {
                rng.gen_range(0.0..=(eta / value.abs()).min(1.0))
            };
            phi.iter().map(|&v| v * (1.0 - alpha)).collect()
        })
        .collect();
    FeatureMap::new(mdp, features.dim(), table).expect("shrunken features stay admissible")
}
