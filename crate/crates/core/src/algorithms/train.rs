use serde::{Deserialize, Serialize};

use super::lambda::lambda_episode;
use super::nstep::{nstep_is_update_with, nstep_onpolicy_update};
use super::one_step::one_step_update;
use super::tree_backup::nstep_treebackup_update;
use super::{AlgoConfig, AlgorithmId, Behaviour, UpdateRecord};
use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Trajectory, Transition};
use crate::sampling::{sample_transition, SampleStream};
use crate::soft::kl_penalty;
use crate::tables::{PolicyTable, QTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub episodes: usize,
    pub max_steps: usize,
    pub start: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub steps: usize,
    /// Discounted sum of rewards.
    #[serde(rename = "return")]
    pub ret: f64,
    /// `Σ_k γ^k (r_k − τ KL(b(·|s_k) ‖ π^d(·|s_k)))` under the acting behaviour `b`.
    pub entropy_augmented_return: f64,
    pub q_error_sup: Option<f64>,
}

pub type LearningCurve = Vec<CurveRow>;

/// One generated episode with what the behaviour looked like at each step.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub trajectory: Trajectory,
    pub records: Vec<UpdateRecord>,
    /// `b(a_k|s_k)` for the action actually taken.
    pub behaviour_probs: Vec<f64>,
    /// `KL(b(·|s_k) ‖ π^d(·|s_k))`.
    pub behaviour_kl: Vec<f64>,
}

pub(crate) struct Driven {
    pub trajectory: Trajectory,
    pub behaviour_probs: Vec<f64>,
    pub behaviour_kl: Vec<f64>,
}

impl Driven {
    fn into_outcome(self, records: Vec<UpdateRecord>) -> EpisodeOutcome {
        EpisodeOutcome {
            trajectory: self.trajectory,
            records,
            behaviour_probs: self.behaviour_probs,
            behaviour_kl: self.behaviour_kl,
        }
    }
}

/// Samples an episode from the live behaviour, calling `on_step` with the
/// transitions and taken-action behaviour probabilities so far after each
/// step.
#[allow(clippy::too_many_arguments)]
pub(crate) fn drive_episode(
    q: &mut QTable,
    mdp: &TabularMdp,
    behaviour: &Behaviour,
    start: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
    max_steps: usize,
    rng: &mut SampleStream,
    mut on_step: impl FnMut(&mut QTable, &[Transition], &[f64]) -> Result<()>,
) -> Result<Driven> {
    q.check_shape(mdp)?;
    default_policy.check_shape(mdp)?;
    if let Behaviour::Table(table) = behaviour {
        table.check_shape(mdp)?;
    }
    mdp.check_state(start)?;
    if mdp.is_terminal(start) {
        return Err(Error::TerminalState(start));
    }
    if max_steps == 0 {
        return Err(Error::invalid("max_steps", "must be positive"));
    }
    let mut transitions = Vec::new();
    let mut behaviour_probs = Vec::new();
    let mut behaviour_kl = Vec::new();
    let mut probs = Vec::with_capacity(q.num_actions());
    let mut s = start;
    for t in 0..max_steps {
        behaviour.probs_into(q, s, default_policy, cfg.tau, &mut probs);
        let a = rng.categorical(&probs);
        let mut tr = sample_transition(mdp, s, a, rng)?;
        tr.t = t;
        behaviour_probs.push(probs[a]);
        behaviour_kl.push(kl_penalty(&probs, default_policy.row(s))?);
        transitions.push(tr);
        on_step(q, &transitions, &behaviour_probs)?;
        if tr.done {
            break;
        }
        s = tr.next_state;
    }
    Ok(Driven {
        trajectory: Trajectory::from_parts_unchecked(transitions, rng.seed(), behaviour.id()),
        behaviour_probs,
        behaviour_kl,
    })
}

/// Runs one episode of the configured algorithm from `start`.
///
/// The n-step family updates `Q(s_t, a_t)` as soon as step `t + n − 1` has
/// been observed; windows still open when the episode ends are updated then
/// with truncated sums.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    q: &mut QTable,
    mdp: &TabularMdp,
    cfg: &AlgoConfig,
    behaviour: &Behaviour,
    default_policy: &PolicyTable,
    start: usize,
    max_steps: usize,
    rng: &mut SampleStream,
) -> Result<EpisodeOutcome> {
    cfg.validate()?;
    if cfg.algorithm_id.is_lambda() {
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
        return Ok(driven.into_outcome(records));
    }

    let n = match cfg.algorithm_id {
        AlgorithmId::SoftQ => 1,
        _ => cfg.n,
    };
    let mut records = Vec::new();
    let driven = drive_episode(
        q,
        mdp,
        behaviour,
        start,
        cfg,
        default_policy,
        max_steps,
        rng,
        |q, steps, bprobs| {
            if steps.len() >= n {
                let t = steps.len() - n;
                records.push(nstep_update(q, steps, t, cfg, default_policy, bprobs)?);
            }
            Ok(())
        },
    )?;
    let steps = driven.trajectory.transitions();
    for t in steps.len().saturating_sub(n - 1)..steps.len() {
        records.push(nstep_update(
            q,
            steps,
            t,
            cfg,
            default_policy,
            &driven.behaviour_probs,
        )?);
    }
    Ok(driven.into_outcome(records))
}

fn nstep_update(
    q: &mut QTable,
    steps: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
    behaviour_probs: &[f64],
) -> Result<UpdateRecord> {
    match cfg.algorithm_id {
        AlgorithmId::SoftQ => one_step_update(q, &steps[t], cfg, default_policy),
        AlgorithmId::NstepSoftQ => nstep_onpolicy_update(q, steps, t, cfg, default_policy),
        AlgorithmId::NstepSoftQIs => {
            nstep_is_update_with(q, steps, t, cfg, default_policy, |k| behaviour_probs[k])
        }
        AlgorithmId::NstepTreeBackup => nstep_treebackup_update(q, steps, t, cfg, default_policy),
        AlgorithmId::SoftQLambda | AlgorithmId::SoftQLambdaTreeBackup => {
            unreachable!("λ ids are handled separately")
        }
    }
}

/// Trains a fresh zero Q-table for `opts.episodes` episodes.
///
/// Episode `i` draws from its own stream of `opts.seed`, so results depend
/// only on the seed. With `oracle` set, each curve row carries the sup-norm
/// error against it over non-terminal pairs.
pub fn train(
    mdp: &TabularMdp,
    cfg: &AlgoConfig,
    behaviour: &Behaviour,
    default_policy: &PolicyTable,
    opts: &TrainOptions,
    oracle: Option<&QTable>,
) -> Result<(QTable, LearningCurve)> {
    cfg.validate()?;
    if cfg.gamma != mdp.gamma() {
        return Err(Error::invalid(
            "gamma",
            format!(
                "algorithm uses {} but the environment uses {}",
                cfg.gamma,
                mdp.gamma()
            ),
        ));
    }
    if let Some(o) = oracle {
        o.check_shape(mdp)?;
    }
    let mut q = QTable::zeros(mdp);
    let mut curve = Vec::with_capacity(opts.episodes);
    for episode in 0..opts.episodes {
        let mut rng = SampleStream::for_episode(opts.seed, episode as u64);
        let out = run_episode(
            &mut q,
            mdp,
            cfg,
            behaviour,
            default_policy,
            opts.start,
            opts.max_steps,
            &mut rng,
        )?;
        let mut ret = 0.0;
        let mut augmented = 0.0;
        let mut discount = 1.0;
        for (tr, kl) in out.trajectory.transitions().iter().zip(&out.behaviour_kl) {
            ret += discount * tr.reward;
            augmented += discount * (tr.reward - cfg.tau.get() * kl);
            discount *= cfg.gamma;
        }
        curve.push(CurveRow {
            episode,
            steps: out.trajectory.len(),
            ret,
            entropy_augmented_return: augmented,
            q_error_sup: oracle.map(|o| q.sup_distance(o)),
        });
    }
    Ok((q, curve))
}
