//! Soft Tree Backup: off-policy n-step soft Q-learning that weights later
//! TD errors by target-policy probabilities instead of importance ratios.

use super::nstep::{apply, check_non_terminal, window_end};
use super::{AlgoConfig, UpdateRecord};
use crate::error::{Error, Result};
use crate::mdp::Transition;
use crate::soft::{
    boltzmann_kl, boltzmann_row_into, soft_state_value, td_error_first, td_error_subsequent,
};
use crate::tables::{PolicyTable, QTable};

/// Frozen-Q tree-format return, evaluated by the recursion
///
/// `G_{k:t+n} = r_{k+1} + γ Σ_{a≠a_{k+1}} π^B(a|s_{k+1}) Q(s_{k+1}, a)
///              + γ π^B(a_{k+1}|s_{k+1}) (G_{k+1:t+n} − τ KL_{k+1})`
///
/// with the deepest level `r + γ V_Q(s')`, or just `r` when `s'` is terminal.
pub fn treebackup_return_direct(
    q: &QTable,
    episode: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
) -> Result<f64> {
    let end = window_end(episode, t, cfg.n)?;
    let (gamma, tau) = (cfg.gamma, cfg.tau);
    let last = &episode[end];
    let mut g = last.reward;
    if !last.done {
        g += gamma * soft_state_value(q, last.next_state, default_policy, tau);
    }
    let mut pi = Vec::with_capacity(q.num_actions());
    for k in (t..end).rev() {
        let next = &episode[k + 1];
        boltzmann_row_into(
            q.row(next.state),
            default_policy.row(next.state),
            tau,
            &mut pi,
        );
        let leaves: f64 = q
            .row(next.state)
            .iter()
            .zip(&pi)
            .enumerate()
            .filter(|(a, _)| *a != next.action)
            .map(|(_, (qv, p))| p * qv)
            .sum();
        let kl = boltzmann_kl(q, next.state, default_policy, tau);
        g = episode[k].reward + gamma * leaves + gamma * pi[next.action] * (g - tau.get() * kl);
    }
    Ok(g)
}

/// Frozen-Q tree-format return written out line by line: line `j` carries
/// weight `γ^j Π_{i=t+1}^{t+j} π^B(a_i|s_i)` and holds
///
/// `r_{t+j+1} − τ KL_{t+j} + γ Σ_{a≠a_{t+j+1}} π^B(a|s_{t+j+1}) Q(s_{t+j+1}, a) − γ τ KL_{t+j+1}`
///
/// (no `KL_{t+j}` term on line 0). The last line sums over every action,
/// which makes its tail `γ V_Q`.
pub fn treebackup_return_explicit(
    q: &QTable,
    episode: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
) -> Result<f64> {
    let end = window_end(episode, t, cfg.n)?;
    let (gamma, tau) = (cfg.gamma, cfg.tau);
    let mut pi = Vec::with_capacity(q.num_actions());
    let mut g = 0.0;
    let mut weight = 1.0;
    for k in t..=end {
        let tr = &episode[k];
        let mut line = tr.reward;
        if k > t {
            line -= tau.get() * boltzmann_kl(q, tr.state, default_policy, tau);
        }
        if k < end {
            let next = &episode[k + 1];
            boltzmann_row_into(
                q.row(next.state),
                default_policy.row(next.state),
                tau,
                &mut pi,
            );
            let leaves: f64 = (0..q.num_actions())
                .filter(|&a| a != next.action)
                .map(|a| pi[a] * q.get(next.state, a))
                .sum();
            line += gamma * leaves
                - gamma * tau.get() * boltzmann_kl(q, next.state, default_policy, tau);
            g += weight * line;
            weight *= gamma * pi[next.action];
        } else {
            if !tr.done {
                line += gamma * soft_state_value(q, tr.next_state, default_policy, tau);
            }
            g += weight * line;
        }
    }
    Ok(g)
}

/// Frozen-Q TD-error form
///
/// `Q(s_t, a_t) + Σ_{k=t}^{min(T−1, t+n−1)} δ_k Π_{i=t+1}^{k} γ π^B(a_i|s_i)`
///
/// minus `γ^n Q(s_{t+n}, a_{t+n}) Π_{i=t+1}^{t+n−1} π^B(a_i|s_i)` when the
/// window ends before termination. That correction needs the action taken
/// at `s_{t+n}`, so a window cut short by a truncated (non-terminal) episode
/// is an error.
pub fn treebackup_return_tdform(
    q: &QTable,
    episode: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
) -> Result<f64> {
    let end = window_end(episode, t, cfg.n)?;
    let mut g = q.get(episode[t].state, episode[t].action)
        + weighted_delta_sum(q, episode, t, end, cfg, default_policy);
    if !episode[end].done {
        let boundary = t + cfg.n;
        let Some(after) = episode.get(boundary).filter(|_| end + 1 == boundary) else {
            return Err(Error::invalid(
                "episode",
                format!("tree-backup window at t = {t} needs the action taken at step {boundary}"),
            ));
        };
        let mut pi = Vec::with_capacity(q.num_actions());
        let mut prod = 1.0;
        for tr in &episode[t + 1..=end] {
            boltzmann_row_into(
                q.row(tr.state),
                default_policy.row(tr.state),
                cfg.tau,
                &mut pi,
            );
            prod *= pi[tr.action];
        }
        g -= cfg.gamma.powi(cfg.n as i32) * q.get(after.state, after.action) * prod;
    }
    Ok(g)
}

/// `Σ_k δ_k Π_{i=t+1}^{k} γ π^B(a_i|s_i)`, first-step error at `k = t`.
fn weighted_delta_sum(
    q: &QTable,
    episode: &[Transition],
    t: usize,
    end: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
) -> f64 {
    let mut sum = td_error_first(q, &episode[t], default_policy, cfg.tau, cfg.gamma);
    let mut weight = 1.0;
    let mut pi = Vec::with_capacity(q.num_actions());
    for tr in &episode[t + 1..=end] {
        boltzmann_row_into(
            q.row(tr.state),
            default_policy.row(tr.state),
            cfg.tau,
            &mut pi,
        );
        weight *= cfg.gamma * pi[tr.action];
        sum += weight * td_error_subsequent(q, tr, default_policy, cfg.tau, cfg.gamma);
    }
    sum
}

/// n-step Tree Backup update of `Q(s_t, a_t)`. Needs no behaviour
/// probabilities.
pub fn nstep_treebackup_update(
    q: &mut QTable,
    episode: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
) -> Result<UpdateRecord> {
    let end = window_end(episode, t, cfg.n)?;
    check_non_terminal(q, &episode[t])?;
    let delta = weighted_delta_sum(q, episode, t, end, cfg, default_policy);
    Ok(apply(
        q,
        &episode[t],
        delta,
        cfg.alpha * delta,
        cfg.frozen_q,
    ))
}
