//! Shared helpers for the criterion benches.

use std::sync::Arc;

use delphi_core::envs::fixtures;
use delphi_core::mdp::MdpSim;
use delphi_core::td::{TdTag, TdVector};
use delphi_core::vspace::VersionSpace;

/// A version space with `slabs` random-ish constraints in dimension `d`.
pub fn seeded_space(d: usize, slabs: usize) -> VersionSpace {
    use rand::Rng;
    let mut rng = delphi_core::rng::seeded_rng(7);
    let mut space = VersionSpace::ball(d, 1.5, slabs + 1);
    for i in 0..slabs {
        let mut values = vec![rng.gen_range(-0.2..0.2)];
        values.extend((0..d).map(|_| rng.gen_range(-1.0f64..1.0)));
        let tau = rng.gen_range(0.1..0.4) + values[0].abs();
        space = space
            .add_constraint(
                &TdVector {
                    values,
                    sample_count: 0,
                    tag: TdTag::Exact,
                },
                tau,
                0,
                i as u32,
            )
            .unwrap();
    }
    space
}

/// A simulator on the first stochastic fixture.
pub fn stochastic_sim(seed: u64) -> (MdpSim, delphi_core::mdp::FeatureMap) {
    let env = fixtures::stochastic_instance(0);
    (MdpSim::new(Arc::clone(&env.mdp), seed), env.features)
}
