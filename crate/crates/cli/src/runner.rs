//! Seeded experiment execution: environment resolution, per-seed runs on a
//! small worker pool, and deterministic CSV/JSON report assembly.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use delphi_core::cubegame::{greedy_planner, CubeGame, GameMode};
use delphi_core::delphi::{
    self, compute_hyperparameters_with, HyperParams, RunConfig,
};
use delphi_core::envs::hypercube::{HypercubeConfig, HypercubeInstance};
use delphi_core::envs::{fixtures, wrappers};
use delphi_core::exact;
use delphi_core::mdp::{FeatureMap, MdpSim, QFeatureMap, TabularMdp};
use delphi_core::oracle::{ExpertMode, ExpertOracle};
use delphi_core::report::{OracleLogEntry, RunRecord};
use delphi_core::rng::derive_seed;

use crate::config::{AlgoMode, CubeGameSpec, EnvSpec, ExperimentConfig, FeatureKind};

/// A resolved environment, ready to run.
pub struct BuiltEnv {
    pub name: String,
    pub mdp: Arc<TabularMdp>,
    pub features: Option<FeatureMap>,
    pub q_features: Option<QFeatureMap>,
    pub expert_policy: Vec<usize>,
    /// The true parameter when the instance is realizable by construction.
    pub theta_circ: Option<Vec<f64>>,
    pub b_default: f64,
    pub v_circ_start: f64,
    pub dim: usize,
}

/// Resolve the environment for one seed (the hypercube may draw its secret
/// from the seed).
pub fn build_env(config: &ExperimentConfig, seed: u64) -> Result<BuiltEnv> {
    let spec = config.env.as_ref().context("missing env section")?;
    match spec {
        EnvSpec::Fixture { name } => build_fixture(name, config.mode),
        EnvSpec::Tabular { spec, expert } => build_tabular(spec, expert.as_deref(), config.mode),
        EnvSpec::TabularFile { path, expert } => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let spec: delphi_core::mdp::TabularMdpSpec =
                serde_json::from_str(&text).context("malformed environment document")?;
            build_tabular(&spec, expert.as_deref(), config.mode)
        }
        EnvSpec::Hypercube {
            p,
            k,
            secret,
            feature_kind,
        } => {
            let secret = match secret {
                Some(s) => s.clone(),
                None => {
                    let all = HypercubeInstance::admissible_secrets(*p);
                    all[(derive_seed(seed, 0x5EC) % all.len() as u64) as usize].clone()
                }
            };
            let inst = HypercubeInstance::build(HypercubeConfig::new(*p, *k, secret)?)?;
            let expert_value = exact::exact_value(&inst.mdp, &inst.expert_policy)?;
            let (features, q_features, theta, b) = match feature_kind {
                FeatureKind::Value => (
                    Some(inst.value_features.clone()),
                    None,
                    Some(inst.theta_v.clone()),
                    delphi_core::linalg::norm2(&inst.theta_v),
                ),
                FeatureKind::Policy => (
                    None,
                    Some(inst.policy_features.clone()),
                    None, // the policy parameter does not zero TD residuals
                    delphi_core::linalg::norm2(&inst.theta_pi),
                ),
            };
            let dim = features
                .as_ref()
                .map(FeatureMap::dim)
                .or_else(|| q_features.as_ref().map(QFeatureMap::dim))
                .unwrap();
            Ok(BuiltEnv {
                name: format!("hypercube-p{p}k{k}"),
                mdp: Arc::clone(&inst.mdp),
                features,
                q_features,
                expert_policy: inst.expert_policy.clone(),
                theta_circ: theta,
                b_default: b,
                v_circ_start: expert_value.v[0],
                dim,
            })
        }
    }
}

fn build_fixture(name: &str, mode: AlgoMode) -> Result<BuiltEnv> {
    let parse_index = |prefix: &str| -> Option<usize> {
        name.strip_prefix(prefix).and_then(|s| s.parse().ok())
    };
    match mode {
        AlgoMode::V => {
            let env = if let Some(i) = parse_index("det-") {
                fixtures::det_instance(i)
            } else if let Some(i) = parse_index("stoch-") {
                fixtures::stochastic_instance(i)
            } else {
                bail!("unknown v-mode fixture `{name}` (want det-0..9 or stoch-0..4)");
            };
            Ok(BuiltEnv {
                name: env.name.clone(),
                dim: env.features.dim(),
                v_circ_start: env.v_circ_start(),
                mdp: env.mdp,
                features: Some(env.features),
                q_features: None,
                expert_policy: env.expert_policy,
                theta_circ: Some(env.theta_circ),
                b_default: env.b_bound,
            })
        }
        AlgoMode::Q => {
            let Some(i) = parse_index("q-") else {
                bail!("unknown q-mode fixture `{name}` (want q-0..2)");
            };
            let env = fixtures::q_instance(i);
            Ok(BuiltEnv {
                name: env.name.clone(),
                dim: env.q_features.dim(),
                v_circ_start: env.v_circ_start(),
                mdp: env.mdp,
                features: None,
                q_features: Some(env.q_features),
                expert_policy: env.expert_policy,
                theta_circ: Some(env.theta_circ),
                b_default: env.b_bound,
            })
        }
        AlgoMode::Cubegame => bail!("cubegame mode does not take an env section"),
    }
}

fn build_tabular(
    spec: &delphi_core::mdp::TabularMdpSpec,
    expert: Option<&[usize]>,
    mode: AlgoMode,
) -> Result<BuiltEnv> {
    let (mdp, doc_features) = spec.build()?;
    let mdp = Arc::new(mdp);
    let expert_policy = match expert {
        Some(table) => table.to_vec(),
        None => exact::exact_optimal(&mdp).0,
    };
    let values = exact::exact_value(&mdp, &expert_policy)?;
    match mode {
        AlgoMode::V => {
            // A document without features gets one-hot features, for which
            // the expert value table is the exact parameter; documents with
            // their own features get a least-squares realizability probe so
            // the default ball still contains θ° whenever one exists.
            let (features, theta) = match doc_features {
                Some(f) => {
                    let theta = exact::fit_linear_parameter(&mdp, &f, &values.v);
                    (f, theta)
                }
                None => {
                    let f = FeatureMap::one_hot(&mdp);
                    let theta: Vec<f64> = (0..mdp.state_count())
                        .filter(|&s| !mdp.is_terminal(s))
                        .map(|s| values.v[s])
                        .collect();
                    (f, Some(theta))
                }
            };
            let b = theta
                .as_ref()
                .map(|t| delphi_core::linalg::norm2(t))
                .unwrap_or(1.0);
            Ok(BuiltEnv {
                name: "tabular".into(),
                dim: features.dim(),
                v_circ_start: start_value(&mdp, &values.v),
                mdp,
                features: Some(features),
                q_features: None,
                expert_policy,
                theta_circ: theta,
                b_default: b.max(1e-9),
            })
        }
        AlgoMode::Q => {
            let q_features = QFeatureMap::one_hot(&mdp);
            let theta: Vec<f64> = (0..mdp.state_count())
                .filter(|&s| !mdp.is_terminal(s))
                .flat_map(|s| values.q[s].clone())
                .collect();
            let b = delphi_core::linalg::norm2(&theta);
            Ok(BuiltEnv {
                name: "tabular-q".into(),
                dim: q_features.dim(),
                v_circ_start: start_value(&mdp, &values.v),
                mdp,
                features: None,
                q_features: Some(q_features),
                expert_policy,
                theta_circ: Some(theta),
                b_default: b.max(1e-9),
            })
        }
        AlgoMode::Cubegame => bail!("cubegame mode does not take an env section"),
    }
}

fn start_value(mdp: &TabularMdp, v: &[f64]) -> f64 {
    match mdp.start_dist() {
        delphi_core::mdp::StartDist::Deterministic { state } => v[*state],
        delphi_core::mdp::StartDist::Categorical { probs } => {
            probs.iter().map(|&(s, p)| p * v[s]).sum()
        }
    }
}

// ---------------------------------------------------------------------------
// Per-seed execution
// ---------------------------------------------------------------------------

/// One CSV row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub rep: u32,
    pub oracle_calls: u64,
    pub exploratory_samples: u64,
    pub restarts: u64,
    pub iterations: u32,
    pub termination: String,
    pub policy_value: f64,
    pub v_circ: f64,
    pub success: bool,
    pub error: String,
}

/// One CSV row of `iterations.csv` (consistency breaks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub seed: u64,
    pub rep: u32,
    pub t: u32,
    pub optimistic_value: f64,
    pub break_state: i64,
    pub break_residual: f64,
    pub oracle_action: i64,
}

/// Everything one seed produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub row: SeedRow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<RunRecord>,
    pub iteration_rows: Vec<IterationRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub oracle_log: Vec<OracleLogEntry>,
}

/// Aggregate statistics over the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub completed: usize,
    pub failed: usize,
    pub success_rate: f64,
    pub mean_oracle_calls: f64,
    pub max_oracle_calls: u64,
    pub mean_exploratory_samples: f64,
}

/// The in-memory result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub outcomes: Vec<SeedOutcome>,
    pub aggregate: Aggregate,
    pub params: Option<HyperParams>,
}

impl ExperimentReport {
    pub fn all_completed(&self) -> bool {
        self.aggregate.failed == 0
    }
}

/// Run every `(seed, rep)` pair of the config, up to `workers` at a time,
/// and assemble reports sorted by `(seed, rep)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut jobs: Vec<(u64, u32)> = Vec::new();
    for &seed in &config.seeds {
        for rep in 0..config.repeat.max(1) {
            jobs.push((seed, rep));
        }
    }
    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        config.workers
    }
    .min(jobs.len().max(1));

    let queue: Mutex<VecDeque<(usize, u64, u32)>> = Mutex::new(
        jobs.iter()
            .enumerate()
            .map(|(i, &(s, r))| (i, s, r))
            .collect(),
    );
    let results: Mutex<Vec<Option<SeedOutcome>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = queue.lock().unwrap().pop_front();
                let Some((idx, seed, rep)) = job else { break };
                let outcome = catch_unwind(AssertUnwindSafe(|| run_one(config, seed, rep)))
                    .unwrap_or_else(|panic| {
                        let message = panic
                            .downcast_ref::<&str>()
                            .map(|s| s.to_string())
                            .or_else(|| panic.downcast_ref::<String>().cloned())
                            .unwrap_or_else(|| "panic".into());
                        failed_outcome(seed, rep, format!("panic: {message}"))
                    });
                results.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });
    let outcomes: Vec<SeedOutcome> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|o| o.expect("every job ran"))
        .collect();

    let aggregate = aggregate(&outcomes);
    let params = match config.mode {
        AlgoMode::Cubegame => None,
        _ => build_env(config, config.seeds[0])
            .ok()
            .and_then(|env| resolve_params(config, &env).ok()),
    };
    let report = ExperimentReport {
        outcomes,
        aggregate,
        params,
    };
    if let Some(dir) = &config.out_dir {
        write_reports(config, &report, dir)?;
    }
    Ok(report)
}

fn failed_outcome(seed: u64, rep: u32, error: String) -> SeedOutcome {
    SeedOutcome {
        row: SeedRow {
            seed,
            rep,
            oracle_calls: 0,
            exploratory_samples: 0,
            restarts: 0,
            iterations: 0,
            termination: "error".into(),
            policy_value: f64::NAN,
            v_circ: f64::NAN,
            success: false,
            error,
        },
        record: None,
        iteration_rows: Vec::new(),
        oracle_log: Vec::new(),
    }
}

fn resolve_params(config: &ExperimentConfig, env: &BuiltEnv) -> Result<HyperParams> {
    let b = config.b_bound.unwrap_or(env.b_default).max(1e-9);
    Ok(compute_hyperparameters_with(
        env.dim,
        env.mdp.horizon(),
        env.mdp.action_count(),
        b,
        config.eps_target.min(env.mdp.horizon() as f64),
        config.delta,
        &config.overrides,
    )?)
}

fn run_one(config: &ExperimentConfig, seed: u64, rep: u32) -> SeedOutcome {
    match run_one_inner(config, seed, rep) {
        Ok(outcome) => outcome,
        Err(e) => failed_outcome(seed, rep, format!("{e:#}")),
    }
}

fn run_one_inner(config: &ExperimentConfig, seed: u64, rep: u32) -> Result<SeedOutcome> {
    let rng_seed = derive_seed(seed, rep as u64);
    if config.mode == AlgoMode::Cubegame {
        return run_cubegame(config, seed, rep, rng_seed);
    }
    let env = build_env(config, seed)?;
    let params = resolve_params(config, &env)?;
    let mut oracle = ExpertOracle::make_tabular_expert(
        &env.mdp,
        ExpertMode::Provided(env.expert_policy.clone()),
    )?;
    if let Some(budget) = config.oracle_budget {
        oracle = oracle.with_budget(budget);
    }
    let mut sim = MdpSim::new(Arc::clone(&env.mdp), rng_seed);
    if let Some(misspec) = &config.misspecification {
        sim = wrappers::wrap_inaccurate(sim, misspec.lambda, misspec.rule.to_rule());
    }
    let run_cfg = RunConfig {
        exact_measurement: config.exact_measurement,
        threshold_mode: config.threshold_mode,
        start_features: None,
    };

    let (mut record, policy_value) = match config.mode {
        AlgoMode::V => {
            let features = env.features.as_ref().context("environment has no state features")?;
            let outcome = delphi::run_delphi(&mut sim, &oracle, features, &params, &run_cfg)?;
            let table = outcome.policy.exact_action_table(&env.mdp, features)?;
            let value = exact::exact_value(&env.mdp, &table)?;
            let policy_value = start_value(&env.mdp, &value.v);
            (outcome.record, policy_value)
        }
        AlgoMode::Q => {
            let qf = env
                .q_features
                .as_ref()
                .context("environment has no state-action features")?;
            let outcome = delphi::run_delphi_q(&mut sim, &oracle, qf, &params, &run_cfg)?;
            let value = outcome.exact_trajectory_return(&env.mdp, qf)?;
            (outcome.record, value)
        }
        AlgoMode::Cubegame => unreachable!(),
    };
    record.theta_circ = env.theta_circ.clone();

    // Accounting cross-check: the stats must agree with the oracle counter.
    if record.stats.oracle_calls != oracle.call_count() {
        bail!(
            "oracle accounting mismatch: stats {} vs counter {}",
            record.stats.oracle_calls,
            oracle.call_count()
        );
    }

    let stats = &record.stats;
    let iteration_rows = stats
        .breaks
        .iter()
        .map(|b| IterationRow {
            seed,
            rep,
            t: b.iteration,
            optimistic_value: stats.optimistic_values[b.iteration as usize - 1],
            break_state: b.state_id as i64,
            break_residual: b.min_residual,
            oracle_action: b.oracle_action.map(|a| a as i64).unwrap_or(-1),
        })
        .collect::<Vec<_>>();
    let oracle_log = if config.oracle_log {
        let mut cumulative = 0u64;
        stats
            .breaks
            .iter()
            .filter(|b| b.oracle_action.is_some())
            .map(|b| {
                cumulative += 1;
                OracleLogEntry {
                    iteration: b.iteration,
                    state_id: b.state_id,
                    action: b.oracle_action.unwrap(),
                    cumulative_count: cumulative,
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    let success = policy_value >= env.v_circ_start - config.eps_target;
    Ok(SeedOutcome {
        row: SeedRow {
            seed,
            rep,
            oracle_calls: stats.oracle_calls,
            exploratory_samples: stats.exploratory_samples,
            restarts: stats.restarts,
            iterations: stats.iterations,
            termination: match stats.termination {
                delphi_core::report::Termination::Consistent => "consistent".into(),
                delphi_core::report::Termination::Exhausted => "exhausted".into(),
            },
            policy_value,
            v_circ: env.v_circ_start,
            success,
            error: String::new(),
        },
        record: Some(record),
        iteration_rows,
        oracle_log,
    })
}

fn run_cubegame(
    config: &ExperimentConfig,
    seed: u64,
    rep: u32,
    rng_seed: u64,
) -> Result<SeedOutcome> {
    let spec: &CubeGameSpec = config.cubegame.as_ref().context("missing cubegame section")?;
    let secret = match &spec.secret {
        Some(s) => s.clone(),
        None => {
            let all = HypercubeInstance::admissible_secrets(spec.p);
            all[(derive_seed(seed, 0x5EC) % all.len() as u64) as usize].clone()
        }
    };
    let mut game = CubeGame::new(spec.p, spec.k, secret, GameMode::Standard, rng_seed)?;
    let budget = spec.budget.or(config.oracle_budget);
    let result = greedy_planner(&mut game, budget)?;
    Ok(SeedOutcome {
        row: SeedRow {
            seed,
            rep,
            oracle_calls: result.total_queries,
            exploratory_samples: result.plays,
            restarts: 0,
            iterations: result.informative_queries as u32,
            termination: "answered".into(),
            policy_value: result.reward,
            v_circ: result.optimal,
            success: result.success,
            error: String::new(),
        },
        record: None,
        iteration_rows: Vec::new(),
        oracle_log: Vec::new(),
    })
}

fn aggregate(outcomes: &[SeedOutcome]) -> Aggregate {
    let runs = outcomes.len();
    let failed = outcomes.iter().filter(|o| !o.row.error.is_empty()).count();
    let completed = runs - failed;
    let successes = outcomes.iter().filter(|o| o.row.success).count();
    let mean = |f: &dyn Fn(&SeedOutcome) -> f64| -> f64 {
        if runs == 0 {
            0.0
        } else {
            outcomes.iter().map(|o| f(o)).sum::<f64>() / runs as f64
        }
    };
    Aggregate {
        runs,
        completed,
        failed,
        success_rate: if runs == 0 {
            0.0
        } else {
            successes as f64 / runs as f64
        },
        mean_oracle_calls: mean(&|o| o.row.oracle_calls as f64),
        max_oracle_calls: outcomes.iter().map(|o| o.row.oracle_calls).max().unwrap_or(0),
        mean_exploratory_samples: mean(&|o| o.row.exploratory_samples as f64),
    }
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

/// Render `runs.csv` (deterministic: shortest-round-trip float formatting,
/// rows in job order, which is sorted by `(seed, rep)`).
pub fn runs_csv(outcomes: &[SeedOutcome]) -> String {
    let mut out = String::from(
        "seed,rep,oracle_calls,exploratory_samples,restarts,iterations,termination,policy_value,v_circ,success,error\n",
    );
    for o in outcomes {
        let r = &o.row;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.rep,
            r.oracle_calls,
            r.exploratory_samples,
            r.restarts,
            r.iterations,
            r.termination,
            r.policy_value,
            r.v_circ,
            r.success,
            r.error.replace(',', ";")
        )
        .unwrap();
    }
    out
}

/// Render `iterations.csv`.
pub fn iterations_csv(outcomes: &[SeedOutcome]) -> String {
    let mut out =
        String::from("seed,rep,t,optimistic_value,break_state,break_residual,oracle_action\n");
    for o in outcomes {
        for row in &o.iteration_rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.seed,
                row.rep,
                row.t,
                row.optimistic_value,
                row.break_state,
                row.break_residual,
                row.oracle_action
            )
            .unwrap();
        }
    }
    out
}

fn write_reports(config: &ExperimentConfig, report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("runs.csv"), runs_csv(&report.outcomes))?;
    fs::write(dir.join("iterations.csv"), iterations_csv(&report.outcomes))?;
    fs::write(
        dir.join("aggregate.json"),
        serde_json::to_string_pretty(&report.aggregate)?,
    )?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(config)?)?;
    if let Some(params) = &report.params {
        fs::write(dir.join("params.json"), serde_json::to_string_pretty(params)?)?;
    }
    let records = dir.join("records");
    fs::create_dir_all(&records)?;
    for o in &report.outcomes {
        if let Some(record) = &o.record {
            fs::write(
                records.join(format!("seed_{}_{}.json", o.row.seed, o.row.rep)),
                serde_json::to_string_pretty(record)?,
            )?;
        }
    }
    if config.oracle_log {
        let mut lines = String::new();
        for o in &report.outcomes {
            for entry in &o.oracle_log {
                lines.push_str(&serde_json::to_string(entry)?);
                lines.push('\n');
            }
        }
        fs::write(dir.join("oracle_log.jsonl"), lines)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Budget curves
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub budget: u64,
    pub success_rate: f64,
    pub mean_samples: f64,
}

/// Sweep oracle budgets and report the success curve.
pub fn compare_oracle_budgets(
    config: &ExperimentConfig,
    budgets: &[u64],
) -> Result<Vec<BudgetRow>> {
    if budgets.is_empty() {
        bail!("budget grid must be non-empty");
    }
    let mut rows = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let mut sub = config.clone();
        sub.out_dir = None;
        match sub.mode {
            AlgoMode::Cubegame => {
                if let Some(cg) = &mut sub.cubegame {
                    cg.budget = Some(budget);
                }
            }
            _ => sub.oracle_budget = Some(budget),
        }
        let report = run_experiment(&sub)?;
        rows.push(BudgetRow {
            budget,
            success_rate: report.aggregate.success_rate,
            mean_samples: report.aggregate.mean_exploratory_samples,
        });
    }
    Ok(rows)
}

/// Render the budget curve CSV.
pub fn budgets_csv(rows: &[BudgetRow]) -> String {
    let mut out = String::from("budget,success_rate,mean_samples\n");
    for row in rows {
        writeln!(out, "{},{},{}", row.budget, row.success_rate, row.mean_samples).unwrap();
    }
    out
}
