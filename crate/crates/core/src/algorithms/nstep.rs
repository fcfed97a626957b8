//! n-step soft Q-learning, on-policy and importance-sampled.

use super::{AlgoConfig, UpdateRecord};
use crate::error::{Error, Result};
use crate::mdp::Transition;
use crate::soft::{
    boltzmann_kl, boltzmann_row_into, soft_state_value, td_error_first, td_error_subsequent,
};
use crate::tables::{PolicyTable, QTable, Temperature};

/// Last step of the window that starts at `t`: `min(T − 1, t + n − 1)`.
pub(crate) fn window_end(episode: &[Transition], t: usize, n: usize) -> Result<usize> {
    if t >= episode.len() {
        return Err(Error::OutOfRange {
            what: "time index",
            index: t,
            limit: episode.len(),
        });
    }
    Ok((episode.len() - 1).min(t + n - 1))
}

/// `Σ_{k=t}^{end} γ^{k−t} δ_k` with the first-step error at `k = t`.
pub(crate) fn discounted_delta_sum(
    q: &QTable,
    episode: &[Transition],
    t: usize,
    end: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
) -> f64 {
    let mut sum = td_error_first(q, &episode[t], default_policy, cfg.tau, cfg.gamma);
    let mut discount = 1.0;
    for tr in &episode[t + 1..=end] {
        discount *= cfg.gamma;
        sum += discount * td_error_subsequent(q, tr, default_policy, cfg.tau, cfg.gamma);
    }
    sum
}

/// Frozen-Q n-step return
/// `r_{t+1} + Σ_{j=1}^{n−1} γ^j (r_{t+j+1} − τ KL_{t+j}) + γ^n V_Q(s_{t+n})`,
/// truncated at termination.
pub fn nstep_return_onpolicy(
    q: &QTable,
    episode: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
) -> Result<f64> {
    let end = window_end(episode, t, cfg.n)?;
    let tau = cfg.tau;
    let mut ret = episode[t].reward;
    let mut discount = 1.0;
    for tr in &episode[t + 1..=end] {
        discount *= cfg.gamma;
        ret += discount * (tr.reward - tau.get() * boltzmann_kl(q, tr.state, default_policy, tau));
    }
    let last = &episode[end];
    if !last.done {
        ret += discount * cfg.gamma * soft_state_value(q, last.next_state, default_policy, tau);
    }
    Ok(ret)
}

/// On-policy n-step update of `Q(s_t, a_t)` over the window starting at `t`.
pub fn nstep_onpolicy_update(
    q: &mut QTable,
    episode: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
) -> Result<UpdateRecord> {
    let end = window_end(episode, t, cfg.n)?;
    check_non_terminal(q, &episode[t])?;
    let delta = discounted_delta_sum(q, episode, t, end, cfg, default_policy);
    Ok(apply(
        q,
        &episode[t],
        delta,
        cfg.alpha * delta,
        cfg.frozen_q,
    ))
}

/// `ρ_{t:h} = Π_{k=t}^{min(h, T−1)} π^B_Q(a_k|s_k) / b(a_k|s_k)`; the empty
/// product is 1.
pub fn importance_ratio(
    q: &QTable,
    default_policy: &PolicyTable,
    tau: Temperature,
    behaviour: &PolicyTable,
    episode: &[Transition],
    t: usize,
    h: usize,
) -> Result<f64> {
    ratio_with(q, default_policy, tau, episode, t, h, |k| {
        behaviour.prob(episode[k].state, episode[k].action)
    })
}

pub(crate) fn ratio_with(
    q: &QTable,
    default_policy: &PolicyTable,
    tau: Temperature,
    episode: &[Transition],
    t: usize,
    h: usize,
    behaviour_prob: impl Fn(usize) -> f64,
) -> Result<f64> {
    if episode.is_empty() {
        return Ok(1.0);
    }
    let last = h.min(episode.len() - 1);
    let mut rho = 1.0;
    let mut pi = Vec::with_capacity(q.num_actions());
    for (k, tr) in episode.iter().enumerate().take(last + 1).skip(t) {
        let b = behaviour_prob(k);
        if b.is_nan() || b <= 0.0 {
            return Err(Error::ImpossibleTrajectory {
                t: k,
                state: tr.state,
                action: tr.action,
            });
        }
        boltzmann_row_into(q.row(tr.state), default_policy.row(tr.state), tau, &mut pi);
        rho *= pi[tr.action] / b;
    }
    Ok(rho)
}

/// Off-policy n-step update weighted by `ρ_{t+1:t+n−1}`.
pub fn nstep_is_update(
    q: &mut QTable,
    episode: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    behaviour: &PolicyTable,
    default_policy: &PolicyTable,
) -> Result<UpdateRecord> {
    nstep_is_update_with(q, episode, t, cfg, default_policy, |k| {
        behaviour.prob(episode[k].state, episode[k].action)
    })
}

/// [`nstep_is_update`] with behaviour probabilities supplied per time step,
/// for behaviours that changed while the episode was generated.
pub fn nstep_is_update_with(
    q: &mut QTable,
    episode: &[Transition],
    t: usize,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
    behaviour_prob: impl Fn(usize) -> f64,
) -> Result<UpdateRecord> {
    let end = window_end(episode, t, cfg.n)?;
    check_non_terminal(q, &episode[t])?;
    let rho = ratio_with(
        q,
        default_policy,
        cfg.tau,
        episode,
        t + 1,
        t + cfg.n - 1,
        behaviour_prob,
    )?;
    let delta = discounted_delta_sum(q, episode, t, end, cfg, default_policy);
    Ok(apply(
        q,
        &episode[t],
        delta,
        cfg.alpha * (rho * delta),
        cfg.frozen_q,
    ))
}

pub(crate) fn check_non_terminal(q: &QTable, tr: &Transition) -> Result<()> {
    if q.is_terminal(tr.state) {
        return Err(Error::TerminalState(tr.state));
    }
    Ok(())
}

pub(crate) fn apply(
    q: &mut QTable,
    tr: &Transition,
    delta: f64,
    increment: f64,
    frozen: bool,
) -> UpdateRecord {
    if !frozen {
        q.add(tr.state, tr.action, increment);
    }
    UpdateRecord {
        time: tr.t,
        target_state: tr.state,
        target_action: tr.action,
        delta,
        increment,
        trace_snapshot_norm: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{one_step_update, AlgorithmId};
    use crate::envs::build_two_state;
    use crate::sampling::{rollout_episode, SampleStream};
    use crate::soft::boltzmann_policy;

    fn cfg(n: usize) -> AlgoConfig {
        AlgoConfig::new(AlgorithmId::NstepSoftQ, 0.3, 0.9, 0.8)
            .unwrap()
            .with_n(n)
            .unwrap()
    }

    fn hand_q() -> QTable {
        let mdp = build_two_state(0.9).unwrap();
        QTable::from_fn(&mdp, |s, a| [[0.4, -1.2], [2.0, 0.7]][s][a]).unwrap()
    }

    fn episode(seed: u64) -> Vec<Transition> {
        let mdp = build_two_state(0.9).unwrap();
        let b = PolicyTable::uniform_for(&mdp);
        rollout_episode(&mdp, &b, 0, 50, &mut SampleStream::new(seed))
            .unwrap()
            .transitions()
            .to_vec()
    }

    fn long_episode() -> Vec<Transition> {
        (0..500).map(episode).find(|e| e.len() >= 4).unwrap()
    }

    #[test]
    fn one_step_return_matches_soft_q_target() {
        let q = hand_q();
        let d = PolicyTable::uniform(3, 2);
        let ep = long_episode();
        let g = nstep_return_onpolicy(&q, &ep, 0, &cfg(1), &d).unwrap();
        let target = ep[0].reward + 0.9 * soft_state_value(&q, ep[0].next_state, &d, cfg(1).tau);
        assert_eq!(g, target);
    }

    #[test]
    fn terminal_next_step_returns_reward() {
        let q = hand_q();
        let d = PolicyTable::uniform(3, 2);
        let ep = (0..500).map(episode).find(|e| e.len() == 1).unwrap();
        assert_eq!(
            nstep_return_onpolicy(&q, &ep, 0, &cfg(4), &d).unwrap(),
            ep[0].reward
        );
    }

    #[test]
    fn return_equals_td_decomposition() {
        let q = hand_q();
        let d = PolicyTable::uniform(3, 2);
        let c = cfg(3);
        let ep = long_episode();
        let g = nstep_return_onpolicy(&q, &ep, 0, &c, &d).unwrap();
        // term-by-term: Q(s_t, a_t) + δ_t + γ δ_{t+1} + γ² δ_{t+2}
        let mut expect = q.get(ep[0].state, ep[0].action);
        expect += td_error_first(&q, &ep[0], &d, c.tau, 0.9);
        expect += 0.9 * td_error_subsequent(&q, &ep[1], &d, c.tau, 0.9);
        expect += 0.81 * td_error_subsequent(&q, &ep[2], &d, c.tau, 0.9);
        assert!((g - expect).abs() < 1e-12, "{g} vs {expect}");
    }

    #[test]
    fn n1_update_is_one_step() {
        let d = PolicyTable::uniform(3, 2);
        let ep = long_episode();
        let mut a = hand_q();
        let mut b = hand_q();
        let c = cfg(1);
        let ra = nstep_onpolicy_update(&mut a, &ep, 1, &c, &d).unwrap();
        let rb = one_step_update(&mut b, &ep[1], &c, &d).unwrap();
        assert_eq!(ra.increment.to_bits(), rb.increment.to_bits());
        assert_eq!(a, b);
    }

    #[test]
    fn frozen_increment_matches_return() {
        let d = PolicyTable::uniform(3, 2);
        let ep = long_episode();
        let mut q = hand_q();
        let c = cfg(3).frozen();
        let rec = nstep_onpolicy_update(&mut q, &ep, 0, &c, &d).unwrap();
        let g = nstep_return_onpolicy(&q, &ep, 0, &c, &d).unwrap();
        let expected = c.alpha * (g - q.get(ep[0].state, ep[0].action));
        assert!((rec.increment - expected).abs() < 1e-12);
        assert_eq!(q, hand_q());
    }

    #[test]
    fn ratio_cases() {
        let q = hand_q();
        let d = PolicyTable::uniform(3, 2);
        let tau = cfg(1).tau;
        let ep = long_episode();
        let target = crate::algorithms::Behaviour::Boltzmann.to_table(&q, &d, tau);
        let r = importance_ratio(&q, &d, tau, &target, &ep, 0, 2).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
        assert_eq!(importance_ratio(&q, &d, tau, &d, &ep, 2, 1).unwrap(), 1.0);

        let r = importance_ratio(&q, &d, tau, &d, &ep, 0, 1).unwrap();
        let p0 = boltzmann_policy(&q, ep[0].state, &d, tau)[ep[0].action];
        let p1 = boltzmann_policy(&q, ep[1].state, &d, tau)[ep[1].action];
        assert!((r - p0 * p1 * 4.0).abs() < 1e-14);
    }

    #[test]
    fn ratio_rejects_impossible_action() {
        let q = hand_q();
        let d = PolicyTable::uniform(3, 2);
        let ep = long_episode();
        let mut rows = vec![vec![0.5, 0.5]; 3];
        rows[ep[0].state][ep[0].action] = 0.0;
        rows[ep[0].state][1 - ep[0].action] = 1.0;
        let b = PolicyTable::new(rows).unwrap();
        let err = importance_ratio(&q, &d, cfg(1).tau, &b, &ep, 0, 0).unwrap_err();
        assert!(matches!(err, Error::ImpossibleTrajectory { t: 0, .. }));
    }

    #[test]
    fn is_update_reductions() {
        let d = PolicyTable::uniform(3, 2);
        let ep = long_episode();
        let base = hand_q();
        let c = AlgoConfig::new(AlgorithmId::NstepSoftQIs, 0.3, 0.9, 0.8).unwrap();

        let mut a = base.clone();
        let mut b = base.clone();
        nstep_is_update(&mut a, &ep, 0, &c, &d, &d).unwrap();
        one_step_update(&mut b, &ep[0], &c, &d).unwrap();
        assert_eq!(a, b);

        let c3 = c.with_n(3).unwrap();
        let target = crate::algorithms::Behaviour::Boltzmann.to_table(&base, &d, c.tau);
        let mut a = base.clone();
        let mut b = base.clone();
        let ra = nstep_is_update(&mut a, &ep, 0, &c3, &target, &d).unwrap();
        let rb = nstep_onpolicy_update(&mut b, &ep, 0, &c3, &d).unwrap();
        assert!((ra.increment - rb.increment).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_time_index() {
        let d = PolicyTable::uniform(3, 2);
        let ep = long_episode();
        let q = hand_q();
        assert!(nstep_return_onpolicy(&q, &ep, ep.len(), &cfg(2), &d).is_err());
    }
}
