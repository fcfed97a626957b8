//! Experiment configs, run orchestration, curve files, verification suites
//! and seed sweeps.

mod curve;
mod sweep;
mod verify;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::{train, AlgoConfig, Behaviour, LearningCurve, TrainOptions};
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::soft::{soft_value_iteration, DEFAULT_VI_MAX_ITERS, DEFAULT_VI_TOL};
use crate::tables::{PolicyTable, QTable};

pub use curve::{emit_curve_csv, parse_curve_csv, read_curve_csv, write_curve_csv, CURVE_HEADER};
pub use sweep::{run_sweep, SweepJob, SweepResult};
pub use verify::{run_verification_suite, CheckResult, Suite, VerificationReport};

/// Behaviour policy as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BehaviourSpec {
    Boltzmann,
    Uniform,
    EpsilonBoltzmann { epsilon: f64 },
    Table { probs: Vec<Vec<f64>> },
}

impl BehaviourSpec {
    pub fn build(&self, mdp: &TabularMdp) -> Result<Behaviour> {
        Ok(match self {
            BehaviourSpec::Boltzmann => Behaviour::Boltzmann,
            BehaviourSpec::Uniform => Behaviour::Uniform,
            BehaviourSpec::EpsilonBoltzmann { epsilon } => {
                Behaviour::epsilon_boltzmann(*epsilon)
                    .map_err(|e| Error::invalid("behaviour.epsilon", e.to_string()))?
            }
            BehaviourSpec::Table { probs } => {
                let table = PolicyTable::new(probs.clone())
                    .map_err(|e| Error::invalid("behaviour.probs", e.to_string()))?;
                table
                    .check_shape(mdp)
                    .map_err(|e| Error::invalid("behaviour.probs", e.to_string()))?;
                Behaviour::Table(table)
            }
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultPolicySpec {
    #[default]
    Uniform,
    Table(Vec<Vec<f64>>),
}

impl DefaultPolicySpec {
    pub fn build(&self, mdp: &TabularMdp) -> Result<PolicyTable> {
        match self {
            DefaultPolicySpec::Uniform => Ok(PolicyTable::uniform_for(mdp)),
            DefaultPolicySpec::Table(rows) => {
                let table = PolicyTable::new(rows.clone())
                    .map_err(|e| Error::invalid("default_policy", e.to_string()))?;
                table
                    .check_shape(mdp)
                    .map_err(|e| Error::invalid("default_policy", e.to_string()))?;
                Ok(table)
            }
        }
    }
}

/// One experiment, as read from JSON. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub algorithm: AlgoConfig,
    pub behaviour: BehaviourSpec,
    #[serde(default)]
    pub default_policy: DefaultPolicySpec,
    pub episodes: usize,
    pub max_steps: usize,
    pub seed: u64,
    /// Compute Q* by soft value iteration and report the error per episode.
    #[serde(default)]
    pub oracle: bool,
    /// Start state of every episode.
    #[serde(default)]
    pub start: usize,
}

/// Everything built from a validated config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub mdp: TabularMdp,
    pub behaviour: Behaviour,
    pub default_policy: PolicyTable,
    pub oracle: Option<QTable>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "experiment config".to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Checks the config and builds the environment, behaviour, default
    /// policy and (if asked for) Q*.
    pub fn prepare(&self) -> Result<Prepared> {
        self.algorithm
            .validate()
            .map_err(|e| Error::invalid("algorithm", e.to_string()))?;
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be positive"));
        }
        if self.algorithm.gamma != self.env.gamma() {
            return Err(Error::invalid(
                "algorithm.gamma",
                format!(
                    "{} differs from env gamma {}",
                    self.algorithm.gamma,
                    self.env.gamma()
                ),
            ));
        }
        let mdp = self
            .env
            .build()
            .map_err(|e| Error::invalid("env", e.to_string()))?;
        if self.start >= mdp.num_states() || mdp.is_terminal(self.start) {
            return Err(Error::invalid(
                "start",
                format!("{} is not a non-terminal state", self.start),
            ));
        }
        let behaviour = self.behaviour.build(&mdp)?;
        let default_policy = self.default_policy.build(&mdp)?;
        let oracle = if self.oracle {
            let vi = soft_value_iteration(
                &mdp,
                &default_policy,
                self.algorithm.tau,
                DEFAULT_VI_TOL,
                DEFAULT_VI_MAX_ITERS,
            )?;
            Some(vi.q)
        } else {
            None
        };
        Ok(Prepared {
            mdp,
            behaviour,
            default_policy,
            oracle,
        })
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            episodes: self.episodes,
            max_steps: self.max_steps,
            start: self.start,
            seed: self.seed,
        }
    }
}

/// Builds the environment and runs the configured training.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(QTable, LearningCurve)> {
    let p = cfg.prepare()?;
    train(
        &p.mdp,
        &cfg.algorithm,
        &p.behaviour,
        &p.default_policy,
        &cfg.train_options(),
        p.oracle.as_ref(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
        "env": {"kind": "chain", "params": {"length": 5, "gamma": 0.95}},
        "algorithm": {"algorithm_id": "soft_q", "alpha": 0.1, "gamma": 0.95, "tau": 0.5},
        "behaviour": {"kind": "uniform"},
        "episodes": 200,
        "max_steps": 500,
        "seed": 3,
        "oracle": true
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json_str(CHAIN).unwrap();
        assert_eq!(cfg.default_policy, DefaultPolicySpec::Uniform);
        assert_eq!(cfg.start, 0);
        let back = ExperimentConfig::from_json_str(&cfg.to_json_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn behaviour_variants_parse() {
        let eps: BehaviourSpec =
            serde_json::from_str(r#"{"kind":"epsilon_boltzmann","epsilon":0.3}"#).unwrap();
        assert_eq!(eps, BehaviourSpec::EpsilonBoltzmann { epsilon: 0.3 });
        let table: BehaviourSpec =
            serde_json::from_str(r#"{"kind":"table","probs":[[0.5,0.5]]}"#).unwrap();
        assert!(matches!(table, BehaviourSpec::Table { .. }));
        assert!(serde_json::from_str::<BehaviourSpec>(r#"{"kind":"greedy"}"#).is_err());
        let d: DefaultPolicySpec = serde_json::from_str(r#"{"table":[[1.0]]}"#).unwrap();
        assert_eq!(d, DefaultPolicySpec::Table(vec![vec![1.0]]));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_fields() {
        let typo = CHAIN.replace("\"oracle\"", "\"oracel\"");
        assert!(ExperimentConfig::from_json_str(&typo).is_err());

        let mut cfg = ExperimentConfig::from_json_str(CHAIN).unwrap();
        cfg.behaviour = BehaviourSpec::EpsilonBoltzmann { epsilon: 1.5 };
        let err = cfg.prepare().unwrap_err().to_string();
        assert!(err.contains("behaviour.epsilon"), "{err}");

        let mut cfg = ExperimentConfig::from_json_str(CHAIN).unwrap();
        cfg.algorithm.gamma = 0.9;
        assert!(cfg.prepare().unwrap_err().to_string().contains("gamma"));

        let mut cfg = ExperimentConfig::from_json_str(CHAIN).unwrap();
        cfg.start = 4;
        assert!(cfg.prepare().unwrap_err().to_string().contains("start"));

        let mut cfg = ExperimentConfig::from_json_str(CHAIN).unwrap();
        cfg.behaviour = BehaviourSpec::Table {
            probs: vec![vec![0.5, 0.5]; 3],
        };
        assert!(cfg.prepare().is_err());
    }

    #[test]
    fn zero_episodes_gives_zero_table() {
        let mut cfg = ExperimentConfig::from_json_str(CHAIN).unwrap();
        cfg.episodes = 0;
        let (q, curve) = run_experiment(&cfg).unwrap();
        assert!(curve.is_empty());
        assert!(q.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_and_oracle_column() {
        let cfg = ExperimentConfig::from_json_str(CHAIN).unwrap();
        let (qa, ca) = run_experiment(&cfg).unwrap();
        let (qb, cb) = run_experiment(&cfg).unwrap();
        assert_eq!(qa, qb);
        assert_eq!(ca, cb);
        assert!(ca.iter().all(|r| r.q_error_sup.is_some()));
        assert!(ca.iter().enumerate().all(|(i, r)| r.episode == i));
    }
}
