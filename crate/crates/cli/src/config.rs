//! Experiment configuration: environment selection, algorithm mode, seed
//! schedule, hyperparameter overrides, and output options. The whole
//! document round-trips through JSON unchanged.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use delphi_core::delphi::{Overrides, ThresholdMode};
use delphi_core::mdp::TabularMdpSpec;
use serde::{Deserialize, Serialize};

/// Which algorithm the experiment drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoMode {
    /// State-value consistency search.
    V,
    /// Action-value variant (deterministic dynamics).
    Q,
    /// The abstract game with a planner.
    Cubegame,
}

/// Environment selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    /// A named built-in instance: `det-0..9`, `stoch-0..4`, `q-0..2`.
    Fixture { name: String },
    /// An inline tabular document (see the environment JSON schema), with
    /// an optional provided expert table (defaults to the optimal policy).
    Tabular {
        spec: TabularMdpSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expert: Option<Vec<usize>>,
    },
    /// A tabular document on disk.
    TabularFile {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expert: Option<Vec<usize>>,
    },
    /// The hypercube instance. A fixed secret pins one environment; with
    /// `secret` absent, each seed draws its own admissible secret.
    Hypercube {
        p: usize,
        k: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        secret: Option<Vec<i8>>,
        #[serde(default)]
        feature_kind: FeatureKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    #[default]
    Value,
    Policy,
}

/// λ-inaccurate wrapper settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecSpec {
    pub lambda: f64,
    pub rule: OffsetRuleSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetRuleSpec {
    Constant,
    Alternating,
    Hashed { seed: u64 },
}

impl OffsetRuleSpec {
    pub fn to_rule(self) -> delphi_core::envs::wrappers::OffsetRule {
        use delphi_core::envs::wrappers::OffsetRule;
        match self {
            OffsetRuleSpec::Constant => OffsetRule::Constant,
            OffsetRuleSpec::Alternating => OffsetRule::Alternating,
            OffsetRuleSpec::Hashed { seed } => OffsetRule::Hashed { seed },
        }
    }
}

/// CubeGame planner settings (used when `mode = "cubegame"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeGameSpec {
    pub p: usize,
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret: Option<Vec<i8>>,
    #[serde(default)]
    pub planner: PlannerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    #[default]
    Greedy,
}

/// The experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<EnvSpec>,
    pub mode: AlgoMode,
    #[serde(default = "default_eps_target")]
    pub eps_target: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Parameter norm bound; defaults to the environment's own `‖θ°‖₂`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_bound: Option<f64>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub threshold_mode: ThresholdMode,
    #[serde(default)]
    pub exact_measurement: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misspecification: Option<MisspecSpec>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_repeat")]
    pub repeat: u32,
    #[serde(default)]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Expert query cap for budget experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cubegame: Option<CubeGameSpec>,
    /// Emit the oracle call log (JSON-lines) alongside the reports.
    #[serde(default)]
    pub oracle_log: bool,
}

fn default_eps_target() -> f64 {
    0.1
}

fn default_delta() -> f64 {
    0.05
}

fn default_repeat() -> u32 {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).context("malformed experiment config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("config needs at least one seed");
        }
        if !(self.eps_target > 0.0) {
            bail!("eps_target must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bail!("delta must lie in (0, 1)");
        }
        match self.mode {
            AlgoMode::Cubegame => {
                if self.cubegame.is_none() {
                    bail!("cubegame mode needs a `cubegame` section");
                }
            }
            _ => {
                if self.env.is_none() {
                    bail!("v/q modes need an `env` section");
                }
            }
        }
        Ok(())
    }

    /// Apply a `key=value` override (the `--override` flag).
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .with_context(|| format!("override `{spec}` is not key=value"))?;
        let int = || -> Result<u64> {
            value
                .parse()
                .with_context(|| format!("override `{key}` needs an integer"))
        };
        let float = || -> Result<f64> {
            value
                .parse()
                .with_context(|| format!("override `{key}` needs a number"))
        };
        match key {
            "e_d" => self.overrides.e_d = Some(int()?),
            "n_rollout" => self.overrides.n_rollout = Some(int()?),
            "cap_n" | "n" => self.overrides.cap_n = Some(int()?),
            "n_eval" => self.overrides.n_eval = Some(int()?),
            "eps_eval" => self.overrides.eps_eval = Some(float()?),
            "eps_bar_eval" => self.overrides.eps_bar_eval = Some(float()?),
            "eps_tol" => self.overrides.eps_tol = Some(float()?),
            "eps_roll" => self.overrides.eps_roll = Some(float()?),
            "eps_target" => self.eps_target = float()?,
            "delta" => self.delta = float()?,
            "b_bound" => self.b_bound = Some(float()?),
            other => bail!("unknown override key `{other}`"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            env: Some(EnvSpec::Fixture {
                name: "stoch-0".into(),
            }),
            mode: AlgoMode::V,
            eps_target: 0.1,
            delta: 0.05,
            b_bound: None,
            overrides: Overrides {
                n_eval: Some(500),
                ..Overrides::default()
            },
            threshold_mode: ThresholdMode::ProofTight,
            exact_measurement: false,
            misspecification: Some(MisspecSpec {
                lambda: 0.004,
                rule: OffsetRuleSpec::Hashed { seed: 9 },
            }),
            seeds: vec![0, 1, 2],
            repeat: 1,
            workers: 2,
            out_dir: None,
            oracle_budget: None,
            cubegame: None,
            oracle_log: false,
        }
    }

    #[test]
    fn config_round_trips_unchanged() {
        let config = sample();
        let json = serde_json::to_string_pretty(&config).unwrap();
        let parsed = ExperimentConfig::from_json(&json).unwrap();
        assert_eq!(config, parsed);
    }

    #[test]
    fn overrides_parse_from_flags() {
        let mut config = sample();
        config.apply_override("n_rollout=30").unwrap();
        config.apply_override("eps_tol=0.25").unwrap();
        assert_eq!(config.overrides.n_rollout, Some(30));
        assert_eq!(config.overrides.eps_tol, Some(0.25));
        assert!(config.apply_override("bogus=1").is_err());
        assert!(config.apply_override("nokey").is_err());
    }

    #[test]
    fn validation_catches_missing_sections() {
        let mut config = sample();
        config.env = None;
        assert!(config.validate().is_err());
        let mut config = sample();
        config.seeds.clear();
        assert!(config.validate().is_err());
        let mut config = sample();
        config.mode = AlgoMode::Cubegame;
        assert!(config.validate().is_err());
    }
}
