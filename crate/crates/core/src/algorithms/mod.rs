//! Learning algorithms and the frozen-Q return oracles used to check them.
//!
//! Every online update evaluates its TD errors against the live Q-table.
//! Two error forms are used (see [`crate::soft`]):
//!
//! * `δ_first = r + γ V_Q(s') − Q(s, a)` for the first step of an n-step window,
//! * `δ = r − τ KL(s) + γ V_Q(s') − V_Q(s)` for later steps of the window and
//!   for every step of the λ algorithms.
//!
//! Discount exponents count from the start of the window (`γ^{k−t}`).

mod behaviour;
mod lambda;
mod nstep;
mod one_step;
mod train;
mod tree_backup;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::Temperature;

pub use behaviour::Behaviour;
pub use lambda::{lambda_return_forward, soft_q_lambda_episode, TraceTable, TRACE_CUTOFF};
pub use nstep::{
    importance_ratio, nstep_is_update, nstep_is_update_with, nstep_onpolicy_update,
    nstep_return_onpolicy,
};
pub use one_step::one_step_update;
pub use train::{run_episode, train, CurveRow, EpisodeOutcome, LearningCurve, TrainOptions};
pub use tree_backup::{
    nstep_treebackup_update, treebackup_return_direct, treebackup_return_explicit,
    treebackup_return_tdform,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmId {
    SoftQ,
    NstepSoftQ,
    NstepSoftQIs,
    NstepTreeBackup,
    SoftQLambda,
    SoftQLambdaTreeBackup,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 6] = [
        AlgorithmId::SoftQ,
        AlgorithmId::NstepSoftQ,
        AlgorithmId::NstepSoftQIs,
        AlgorithmId::NstepTreeBackup,
        AlgorithmId::SoftQLambda,
        AlgorithmId::SoftQLambdaTreeBackup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::SoftQ => "soft_q",
            AlgorithmId::NstepSoftQ => "nstep_soft_q",
            AlgorithmId::NstepSoftQIs => "nstep_soft_q_is",
            AlgorithmId::NstepTreeBackup => "nstep_tree_backup",
            AlgorithmId::SoftQLambda => "soft_q_lambda",
            AlgorithmId::SoftQLambdaTreeBackup => "soft_q_lambda_tree_backup",
        }
    }

    pub fn is_lambda(self) -> bool {
        matches!(
            self,
            AlgorithmId::SoftQLambda | AlgorithmId::SoftQLambdaTreeBackup
        )
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "algorithm_id",
                name: s.to_string(),
            })
    }
}

fn default_n() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoConfig {
    pub algorithm_id: AlgorithmId,
    pub alpha: f64,
    pub gamma: f64,
    pub tau: Temperature,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub lambda: f64,
    /// Compute increments without applying them.
    #[serde(default)]
    pub frozen_q: bool,
}

impl AlgoConfig {
    pub fn new(algorithm_id: AlgorithmId, alpha: f64, gamma: f64, tau: f64) -> Result<Self> {
        let cfg = AlgoConfig {
            algorithm_id,
            alpha,
            gamma,
            tau: Temperature::new(tau)?,
            n: 1,
            lambda: 0.0,
            frozen_q: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_n(mut self, n: usize) -> Result<Self> {
        self.n = n;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.lambda = lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn frozen(mut self) -> Self {
        self.frozen_q = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(
                "alpha",
                format!("{} is outside (0, 1]", self.alpha),
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid(
                "gamma",
                format!("{} is outside [0, 1]", self.gamma),
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(
                "lambda",
                format!("{} is outside [0, 1]", self.lambda),
            ));
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        Ok(())
    }
}

/// Audit entry for one applied (or, with `frozen_q`, computed) change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub time: usize,
    pub target_state: usize,
    pub target_action: usize,
    /// Weighted TD-error sum driving the change (before α).
    pub delta: f64,
    pub increment: f64,
    /// Sup-norm of the trace table; zero for the n-step family.
    pub trace_snapshot_norm: f64,
}
