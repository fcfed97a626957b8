//! Soft Q(λ) with accumulating traces, on-policy and Tree Backup.

use super::nstep::check_non_terminal;
use super::train::{drive_episode, Driven};
use super::{AlgoConfig, AlgorithmId, Behaviour, UpdateRecord};
use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Trajectory, Transition};
use crate::sampling::SampleStream;
use crate::soft::{boltzmann_row_into, td_error_subsequent};
use crate::tables::{PolicyTable, QTable};

/// Traces at or below this value are dropped.
pub const TRACE_CUTOFF: f64 = 1e-12;

/// Eligibility traces with a list of the non-zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    num_actions: usize,
    values: Vec<f64>,
    active: Vec<usize>,
}

impl TraceTable {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        TraceTable {
            num_actions,
            values: vec![0.0; num_states * num_actions],
            active: Vec::new(),
        }
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    /// Multiplies every trace by `factor`, dropping those that fall to the cutoff.
    pub fn decay(&mut self, factor: f64) {
        let values = &mut self.values;
        self.active.retain(|&i| {
            values[i] *= factor;
            if values[i] > TRACE_CUTOFF {
                true
            } else {
                values[i] = 0.0;
                false
            }
        });
    }

    pub fn visit(&mut self, s: usize, a: usize) {
        let i = s * self.num_actions + a;
        if self.values[i] == 0.0 {
            self.active.push(i);
        }
        self.values[i] += 1.0;
    }

    /// Non-zero entries as `(state, action, trace)`.
    pub fn active(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.active
            .iter()
            .map(|&i| (i / self.num_actions, i % self.num_actions, self.values[i]))
    }

    pub fn sup_norm(&self) -> f64 {
        self.active
            .iter()
            .map(|&i| self.values[i])
            .fold(0.0, f64::max)
    }
}

/// Frozen-Q forward-view λ-return from step `t` of a complete episode.
///
/// On-policy: `Q(s_t, a_t) + Σ_k (γλ)^{k−t} δ_k`.
/// Off-policy: `Q(s_t, a_t) + Σ_k δ_k Π_{i=t+1}^{k} γλ π^B(a_i|s_i)`.
/// Every `δ_k` has the form `r − τ KL(s_k) + γ V_Q(s') − V_Q(s_k)`.
pub fn lambda_return_forward(
    q: &QTable,
    episode: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
    offpolicy: bool,
) -> Result<f64> {
    if t >= episode.len() {
        return Err(Error::OutOfRange {
            what: "time index",
            index: t,
            limit: episode.len(),
        });
    }
    let (gamma, lambda, tau) = (cfg.gamma, cfg.lambda, cfg.tau);
    let mut g = q.get(episode[t].state, episode[t].action);
    let mut weight = 1.0;
    let mut pi = Vec::with_capacity(q.num_actions());
    for (k, tr) in episode.iter().enumerate().skip(t) {
        if k > t {
            weight *= gamma * lambda;
            if offpolicy {
                boltzmann_row_into(q.row(tr.state), default_policy.row(tr.state), tau, &mut pi);
                weight *= pi[tr.action];
            }
            if weight == 0.0 {
                break;
            }
        }
        g += weight * td_error_subsequent(q, tr, default_policy, tau, gamma);
    }
    Ok(g)
}

/// Runs one episode of Soft Q(λ), updating `q` online.
///
/// Tree-backup mode (`soft_q_lambda_tree_backup`) scales the trace decay by
/// `π^B(a_t|s_t)`. Records are emitted for every pair changed at every step.
#[allow(clippy::too_many_arguments)]
pub fn soft_q_lambda_episode(
    q: &mut QTable,
    mdp: &TabularMdp,
    behaviour: &Behaviour,
    start: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
    max_steps: usize,
    rng: &mut SampleStream,
) -> Result<(Trajectory, Vec<UpdateRecord>)> {
    if !cfg.algorithm_id.is_lambda() {
        return Err(Error::invalid(
            "algorithm_id",
            format!("{} is not a λ algorithm", cfg.algorithm_id),
        ));
    }
    let (driven, records) = lambda_episode(
        q,
        mdp,
        behaviour,
        start,
        cfg,
        default_policy,
        max_steps,
        rng,
    )?;
    Ok((driven.trajectory, records))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn lambda_episode(
    q: &mut QTable,
    mdp: &TabularMdp,
    behaviour: &Behaviour,
    start: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
    max_steps: usize,
    rng: &mut SampleStream,
) -> Result<(Driven, Vec<UpdateRecord>)> {
    let tree = cfg.algorithm_id == AlgorithmId::SoftQLambdaTreeBackup;
    let mut traces = TraceTable::new(q.num_states(), q.num_actions());
    let mut records = Vec::new();
    let mut pi = Vec::with_capacity(q.num_actions());
    let driven = drive_episode(
        q,
        mdp,
        behaviour,
        start,
        cfg,
        default_policy,
        max_steps,
        rng,
        |q, steps, _| {
            let tr = steps[steps.len() - 1];
            check_non_terminal(q, &tr)?;
            let delta = td_error_subsequent(q, &tr, default_policy, cfg.tau, cfg.gamma);
            let mut decay = cfg.gamma * cfg.lambda;
            if tree {
                boltzmann_row_into(
                    q.row(tr.state),
                    default_policy.row(tr.state),
                    cfg.tau,
                    &mut pi,
                );
                decay *= pi[tr.action];
            }
            traces.decay(decay);
            traces.visit(tr.state, tr.action);
            let norm = traces.sup_norm();
            for (s, a, e) in traces.active() {
                let increment = cfg.alpha * delta * e;
                if !cfg.frozen_q {
                    q.add(s, a, increment);
                }
                records.push(UpdateRecord {
                    time: tr.t,
                    target_state: s,
                    target_action: a,
                    delta,
                    increment,
                    trace_snapshot_norm: norm,
                });
            }
            Ok(())
        },
    )?;
    Ok((driven, records))
}
