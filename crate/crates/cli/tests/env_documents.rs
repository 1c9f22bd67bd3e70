//! Environment plumbing through the runner: inline tabular documents,
//! documents on disk, and the hypercube construction end to end.

use delphi_cli::config::{AlgoMode, EnvSpec, ExperimentConfig, FeatureKind};
use delphi_cli::runner::run_experiment;
use delphi_core::delphi::Overrides;
use delphi_core::envs::fixtures;
use delphi_core::mdp::{FeatureMap, TabularMdpSpec};

fn base_config(env: EnvSpec, exact: bool) -> ExperimentConfig {
    ExperimentConfig {
        env: Some(env),
        mode: AlgoMode::V,
        eps_target: 0.1,
        delta: 0.05,
        b_bound: None,
        overrides: Overrides {
            e_d: Some(8),
            n_eval: Some(1),
            n_rollout: Some(1),
            eps_bar_eval: Some(2.0 * 8f64.sqrt() * 1e-7),
            eps_tol: Some(1e-3),
            ..Overrides::default()
        },
        threshold_mode: Default::default(),
        exact_measurement: exact,
        misspecification: None,
        seeds: vec![0, 1],
        repeat: 1,
        workers: 1,
        out_dir: None,
        oracle_budget: None,
        cubegame: None,
        oracle_log: false,
    }
}

#[test]
fn inline_tabular_document_runs() {
    let mdp = fixtures::branching_example();
    let fm = FeatureMap::one_hot(&mdp);
    let spec = TabularMdpSpec::from_mdp(&mdp, Some(&fm));
    // Without features in the document the runner falls back to one-hot;
    // with them it uses the document's map. Exercise the latter.
    let config = base_config(EnvSpec::Tabular { spec, expert: None }, true);
    let report = run_experiment(&config).unwrap();
    assert!(report.all_completed());
    for o in &report.outcomes {
        assert!(o.row.success, "seed {}: {:?}", o.row.seed, o.row);
    }
}

#[test]
fn tabular_document_from_disk_runs() {
    let mdp = fixtures::branching_example();
    let spec = TabularMdpSpec::from_mdp(&mdp, None);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env.json");
    std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    let config = base_config(EnvSpec::TabularFile { path, expert: None }, true);
    let report = run_experiment(&config).unwrap();
    assert!(report.all_completed());
}

#[test]
fn provided_expert_table_is_respected() {
    // A deliberately suboptimal expert: success is judged against *its*
    // value, so the run still succeeds.
    let mdp = fixtures::branching_example();
    let spec = TabularMdpSpec::from_mdp(&mdp, None);
    let expert = vec![1usize; 5];
    let config = base_config(
        EnvSpec::Tabular {
            spec,
            expert: Some(expert.clone()),
        },
        true,
    );
    let report = run_experiment(&config).unwrap();
    let expert_value = delphi_core::exact::exact_value(&mdp, &expert).unwrap().v[0];
    for o in &report.outcomes {
        assert!((o.row.v_circ - expert_value).abs() <= 1e-12);
        assert!(o.row.success);
    }
}

#[test]
fn repeat_count_multiplies_rows_with_independent_draws() {
    let mut config = base_config(
        EnvSpec::Fixture {
            name: "stoch-0".into(),
        },
        false,
    );
    config.overrides.n_eval = Some(60);
    config.overrides.n_rollout = Some(4);
    config.overrides.eps_bar_eval = Some(0.1);
    config.seeds = vec![5];
    config.repeat = 3;
    let report = run_experiment(&config).unwrap();
    assert_eq!(report.outcomes.len(), 3);
    for (rep, o) in report.outcomes.iter().enumerate() {
        assert_eq!(o.row.seed, 5);
        assert_eq!(o.row.rep, rep as u32);
    }
    // Repetitions draw from derived streams: their sample counts are not
    // all forced equal (breaks land at different points).
    let samples: Vec<u64> = report.outcomes.iter().map(|o| o.row.exploratory_samples).collect();
    assert!(samples.iter().all(|&s| s > 0));
}

#[test]
fn hypercube_environment_is_solved_in_the_exact_regime() {
    // d = 21 value features; the guarantee allows d+1 = 22 oracle calls.
    let mut config = base_config(
        EnvSpec::Hypercube {
            p: 4,
            k: 2,
            secret: Some(vec![-1, 1, 1, -1]),
            feature_kind: FeatureKind::Value,
        },
        true,
    );
    config.overrides.e_d = Some(22);
    config.overrides.eps_bar_eval = Some(2.0 * 22f64.sqrt() * 1e-7);
    config.seeds = vec![0];
    let report = run_experiment(&config).unwrap();
    assert!(report.all_completed());
    let row = &report.outcomes[0].row;
    assert!(row.oracle_calls <= 22, "{} oracle calls", row.oracle_calls);
    assert!(row.success, "policy value {} vs v° {}", row.policy_value, row.v_circ);
    assert_eq!(row.termination, "consistent");
}

#[test]
fn hypercube_secret_drawn_per_seed_when_absent() {
    let mut config = base_config(
        EnvSpec::Hypercube {
            p: 4,
            k: 2,
            secret: None,
            feature_kind: FeatureKind::Value,
        },
        true,
    );
    config.overrides.e_d = Some(22);
    config.overrides.eps_bar_eval = Some(2.0 * 22f64.sqrt() * 1e-7);
    config.seeds = vec![0, 1, 2, 3];
    let report = run_experiment(&config).unwrap();
    assert!(report.all_completed());
    for o in &report.outcomes {
        assert!(o.row.success, "seed {} failed: {:?}", o.row.seed, o.row);
        assert!(o.row.v_circ > 0.0);
    }
}
