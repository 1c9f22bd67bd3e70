//! Property tests for the crate's structural invariants.

use delphi_core::cubegame::cubegame_reward;
use delphi_core::envs::hypercube::hamming;
use delphi_core::mdp::{RewardKind, RewardSpec, StartSpec, TabularMdpSpec};
use delphi_core::td::{TdTag, TdVector};
use delphi_core::vspace::VersionSpace;
use proptest::prelude::*;

fn sign_vector(p: usize) -> impl Strategy<Value = Vec<i8>> {
    proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], p)
}

proptest! {
    #[test]
    fn hamming_is_the_bilinear_identity(x in sign_vector(12), y in sign_vector(12)) {
        let inner: i32 = x.iter().zip(&y).map(|(&a, &b)| a as i32 * b as i32).sum();
        let rho = hamming(&x, &y).unwrap();
        prop_assert_eq!(rho as i32, (12 - inner) / 2);
        prop_assert_eq!(rho, hamming(&y, &x).unwrap());
    }

    #[test]
    fn adding_a_slab_never_adds_points(
        theta in proptest::collection::vec(-1.5f64..1.5, 3),
        normal in proptest::collection::vec(-1.0f64..1.0, 3),
        offset in -0.5f64..0.5,
        tau in 0.01f64..0.5,
    ) {
        let base = VersionSpace::ball(3, 1.2, 4);
        let mut delta = vec![offset];
        delta.extend(normal);
        let tightened = base
            .add_constraint(
                &TdVector { values: delta, sample_count: 0, tag: TdTag::Exact },
                tau,
                0,
                1,
            )
            .unwrap();
        if tightened.contains(&theta).inside {
            prop_assert!(base.contains(&theta).inside);
        }
    }

    #[test]
    fn cubegame_reward_respects_the_decay_bound(
        w_star in sign_vector(8),
        seq in proptest::collection::vec(sign_vector(8), 0..3),
    ) {
        let p = 8usize;
        let rho0 = hamming(&vec![1; p], &w_star).unwrap();
        prop_assume!(rho0 >= p / 4 && rho0 <= 3 * p / 4);
        match cubegame_reward(&seq, &w_star) {
            Ok(f) => {
                let k = seq.len();
                let last = seq.last().cloned().unwrap_or_else(|| vec![1; p]);
                let far = hamming(&last, &w_star).unwrap() >= p / 4;
                let bound = 0.75f64.powi(k as i32 + i32::from(far));
                prop_assert!(f <= bound + 1e-12, "f = {f}, bound = {bound}");
                // f vanishes exactly when some factor hits an antipodal
                // pair (distance p); otherwise it is strictly positive.
                let mut prev = vec![1i8; p];
                let mut has_antipodal = false;
                for w in &seq {
                    has_antipodal |= hamming(&prev, w).unwrap() == p;
                    prev = w.clone();
                }
                has_antipodal |= hamming(&prev, &w_star).unwrap() == p;
                prop_assert_eq!(f == 0.0, has_antipodal, "f = {}", f);
            }
            Err(_) => {} // illegal gap; nothing to check
        }
    }

    #[test]
    fn tabular_spec_round_trips_through_json(
        rewards in proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 4),
        start_first in proptest::bool::ANY,
    ) {
        // A two-layer, two-action environment with randomized reward
        // specs; serialization must reproduce the document exactly.
        let reward_spec = |i: usize| {
            let (mean, bern) = rewards[i];
            RewardSpec {
                mean,
                kind: if bern { RewardKind::Bernoulli } else { RewardKind::Deterministic },
            }
        };
        let spec = TabularMdpSpec {
            horizon: 1,
            action_count: 2,
            states_per_layer: vec![2, 1],
            transitions: vec![
                vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]],
                vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]],
                vec![],
            ],
            rewards: vec![
                vec![reward_spec(0), reward_spec(1)],
                vec![reward_spec(2), reward_spec(3)],
                vec![],
            ],
            features: Some(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]),
            start: StartSpec::Deterministic { state: usize::from(!start_first) },
        };
        let json = serde_json::to_string(&spec).unwrap();
        let parsed: TabularMdpSpec = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&spec, &parsed);
        let (mdp, features) = parsed.build().unwrap();
        prop_assert_eq!(mdp.state_count(), 3);
        prop_assert!(features.is_some());
    }
}
